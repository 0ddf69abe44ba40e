// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include "p4gcn/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace p4gcn {

namespace {

// One-sided Jacobi on columns of b (m x n, m >= n assumed by caller logic):
// rotates column pairs until they are pairwise orthogonal, accumulating the
// rotations into v.
void jacobi_columns(DenseMatrix& b, DenseMatrix& v) {
  const std::size_t m = b.rows();
  const std::size_t n = b.cols();
  const double eps = 1e-15;
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          app += b(i, p) * b(i, p);
          aqq += b(i, q) * b(i, q);
          apq += b(i, p) * b(i, q);
        }
        if (std::fabs(apq) <= eps * std::sqrt(app * aqq)) continue;
        rotated = true;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double bp = b(i, p), bq = b(i, q);
          b(i, p) = c * bp - s * bq;
          b(i, q) = s * bp + c * bq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }
}

}  // namespace

Svd svd(const DenseMatrix& a) {
  if (a.rows() < a.cols()) {
    Svd t = svd(a.transposed());
    return Svd{std::move(t.v), std::move(t.sigma), std::move(t.u)};
  }
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  DenseMatrix b = a;
  DenseMatrix v = DenseMatrix::identity(n);
  jacobi_columns(b, v);

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += b(i, j) * b(i, j);
    sigma[j] = std::sqrt(acc);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  Svd out;
  out.u = DenseMatrix(m, n);
  out.v = DenseMatrix(n, n);
  out.sigma.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.sigma[j] = sigma[src];
    const double inv = sigma[src] > 0.0 ? 1.0 / sigma[src] : 0.0;
    for (std::size_t i = 0; i < m; ++i) out.u(i, j) = b(i, src) * inv;
    for (std::size_t i = 0; i < n; ++i) out.v(i, j) = v(i, src);
  }
  return out;
}

DenseMatrix pseudo_inverse(const DenseMatrix& a, double rel_tol) {
  Svd s = svd(a);
  const double smax = s.sigma.empty() ? 0.0 : s.sigma.front();
  const double tol = smax * rel_tol * static_cast<double>(std::max(a.rows(), a.cols()));
  DenseMatrix vs = s.v;  // n x r scaled by 1/sigma where significant
  for (std::size_t j = 0; j < s.sigma.size(); ++j) {
    const double inv = s.sigma[j] > tol ? 1.0 / s.sigma[j] : 0.0;
    for (std::size_t i = 0; i < vs.rows(); ++i) vs(i, j) *= inv;
  }
  return matmul(vs, s.u.transposed());
}

DenseMatrix least_squares_min_norm(const DenseMatrix& a, const DenseMatrix& b) {
  return matmul(pseudo_inverse(a), b);
}

}  // namespace p4gcn
