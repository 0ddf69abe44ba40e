// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace p4gcn {

/// Row-major dense matrix of doubles; the numeric carrier for features,
/// weights, Laplacians and gradients.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const DenseMatrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }
  bool all_finite() const;

  DenseMatrix transposed() const;

  DenseMatrix& operator+=(const DenseMatrix& o);
  DenseMatrix& operator-=(const DenseMatrix& o);
  DenseMatrix& operator*=(double s);

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double s, DenseMatrix a);

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);

double frobenius_norm(const DenseMatrix& m);
std::vector<double> row_l2_norms(const DenseMatrix& m);
double max_abs(const DenseMatrix& m);

// Each row r is replaced by r / max(1, ||r||_2 / c).
DenseMatrix clip_rows(const DenseMatrix& m, double c);
// Whole matrix scaled by 1 / max(1, ||m||_F / c).
DenseMatrix clip_frobenius(const DenseMatrix& m, double c);

DenseMatrix relu(const DenseMatrix& m);
// Elementwise g * (pre > 0), the backward mask of relu(pre).
DenseMatrix relu_backward(const DenseMatrix& g, const DenseMatrix& pre);

// Rows of m at the given indices, in the given order.
DenseMatrix select_rows(const DenseMatrix& m, std::span<const std::size_t> idx);
// [a | b] side by side.
DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace p4gcn
