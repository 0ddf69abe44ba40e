// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "p4gcn/matrix.hpp"

namespace p4gcn {

struct Svd {
  DenseMatrix u;               // m x r
  std::vector<double> sigma;   // r singular values, descending
  DenseMatrix v;               // n x r
};

/// One-sided Jacobi SVD, adequate for the small dense matrices used here.
Svd svd(const DenseMatrix& a);

DenseMatrix pseudo_inverse(const DenseMatrix& a, double rel_tol = 1e-12);

/// Minimum-norm least-squares solution X of A X = B.
DenseMatrix least_squares_min_norm(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace p4gcn
