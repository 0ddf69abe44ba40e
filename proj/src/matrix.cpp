// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include "p4gcn/matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "p4gcn/kernels.hpp"

namespace p4gcn {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw std::invalid_argument("DenseMatrix: data length does not match shape");
  }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw std::invalid_argument("DenseMatrix: ragged initializer");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool DenseMatrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  }
  return t;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& o) {
  if (!same_shape(o)) throw std::invalid_argument("matrix add: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& o) {
  if (!same_shape(o)) throw std::invalid_argument("matrix sub: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
  return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions do not match");
  }
  DenseMatrix c(a.rows(), b.cols());
  kern::active_matmul()(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("hadamard: shape mismatch");
  DenseMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] * b.data()[i];
  return c;
}

double frobenius_norm(const DenseMatrix& m) {
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) acc += m.data()[i] * m.data()[i];
  return std::sqrt(acc);
}

std::vector<double> row_l2_norms(const DenseMatrix& m) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (double v : m.row(i)) acc += v * v;
    out[i] = std::sqrt(acc);
  }
  return out;
}

double max_abs(const DenseMatrix& m) {
  double out = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) out = std::max(out, std::fabs(m.data()[i]));
  return out;
}

DenseMatrix clip_rows(const DenseMatrix& m, double c) {
  if (c <= 0.0) throw std::invalid_argument("clip_rows: c must be positive");
  DenseMatrix out = m;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (double v : m.row(i)) acc += v * v;
    const double norm = std::sqrt(acc);
    const double scale = 1.0 / std::max(1.0, norm / c);
    if (scale != 1.0) {
      for (double& v : out.row(i)) v *= scale;
    }
  }
  return out;
}

DenseMatrix clip_frobenius(const DenseMatrix& m, double c) {
  if (c <= 0.0) throw std::invalid_argument("clip_frobenius: c must be positive");
  DenseMatrix out = m;
  const double scale = 1.0 / std::max(1.0, frobenius_norm(m) / c);
  if (scale != 1.0) out *= scale;
  return out;
}

DenseMatrix relu(const DenseMatrix& m) {
  DenseMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) {
    out.data()[i] = m.data()[i] > 0.0 ? m.data()[i] : 0.0;
  }
  return out;
}

DenseMatrix relu_backward(const DenseMatrix& g, const DenseMatrix& pre) {
  if (!g.same_shape(pre)) throw std::invalid_argument("relu_backward: shape mismatch");
  DenseMatrix out(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.data()[i] = pre.data()[i] > 0.0 ? g.data()[i] : 0.0;
  }
  return out;
}

DenseMatrix select_rows(const DenseMatrix& m, std::span<const std::size_t> idx) {
  DenseMatrix out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= m.rows()) throw std::out_of_range("select_rows: index out of range");
    auto src = m.row(idx[i]);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) dst[j] = src[j];
  }
  return out;
}

DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("hconcat: row mismatch");
  DenseMatrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    auto ra = a.row(i);
    auto rb = b.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) dst[j] = ra[j];
    for (std::size_t j = 0; j < b.cols(); ++j) dst[a.cols() + j] = rb[j];
  }
  return out;
}

}  // namespace p4gcn
