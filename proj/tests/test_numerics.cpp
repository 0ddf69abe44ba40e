// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "p4gcn/kernels.hpp"
#include "p4gcn/matrix.hpp"
#include "p4gcn/rng.hpp"
#include "p4gcn/svd.hpp"

using namespace p4gcn;

namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c, RngState& rng, double scale = 1.0) {
  DenseMatrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

// Naive triple-loop product, the independent reference for matmul.
DenseMatrix matmul_naive(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  }
  return c;
}

}  // namespace

TEST_SUITE("numerics") {

TEST_CASE("matmul identity and hand case") {
  const DenseMatrix m{{1.0, 2.0}, {3.0, 4.0}};
  CHECK(matmul(DenseMatrix::identity(2), m) == m);
  const DenseMatrix v{{1.0}, {1.0}};
  const DenseMatrix got = matmul(m, v);
  CHECK(got(0, 0) == doctest::Approx(3.0));
  CHECK(got(1, 0) == doctest::Approx(7.0));
}

TEST_CASE("matmul matches naive oracle") {
  RngState rng(11);
  const DenseMatrix a = random_matrix(5, 4, rng);
  const DenseMatrix b = random_matrix(4, 3, rng);
  const DenseMatrix c = matmul(a, b);
  const DenseMatrix want = matmul_naive(a, b);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(std::fabs(c.data()[i] - want.data()[i]) <= 1e-12);
  }
}

TEST_CASE("matmul rejects dimension mismatch") {
  CHECK_THROWS_AS(matmul(DenseMatrix(2, 3), DenseMatrix(2, 3)), std::invalid_argument);
}

TEST_CASE("matmul associativity on random triples") {
  RngState rng(17);
  for (int t = 0; t < 20; ++t) {
    const DenseMatrix a = random_matrix(4, 3, rng);
    const DenseMatrix b = random_matrix(3, 5, rng);
    const DenseMatrix c = random_matrix(5, 2, rng);
    const double lhs = frobenius_norm(matmul(matmul(a, b), c) - matmul(a, matmul(b, c)));
    const double bound =
        1e-9 * frobenius_norm(a) * frobenius_norm(b) * frobenius_norm(c);
    CHECK(lhs <= bound);
  }
}

TEST_CASE("kernel variants are bit-identical") {
  const auto variants = kern::runnable_kernels();
  CAPTURE(variants.size());
  RngState rng(23);
  for (int t = 0; t < 10; ++t) {
    const std::size_t m = 1 + rng.uniform_index(17);
    const std::size_t k = 1 + rng.uniform_index(17);
    const std::size_t n = 1 + rng.uniform_index(17);
    const DenseMatrix a = random_matrix(m, k, rng);
    const DenseMatrix b = random_matrix(k, n, rng);
    std::vector<double> ref(m * n);
    kern::matmul_scalar(a.data(), b.data(), ref.data(), m, k, n);
    for (const auto& name : variants) {
      std::vector<double> got(m * n, -1.0);
      kern::kernel_by_name(name)(a.data(), b.data(), got.data(), m, k, n);
      CHECK_MESSAGE(got == ref, "kernel ", name);
    }
  }
}

TEST_CASE("clip_rows examples") {
  const DenseMatrix m{{3.0, 4.0}};
  CHECK(clip_rows(m, 10.0) == m);  // norm 5 <= 10: unchanged
  const DenseMatrix clipped = clip_rows(m, 1.0);
  CHECK(clipped(0, 0) == doctest::Approx(0.6));
  CHECK(clipped(0, 1) == doctest::Approx(0.8));
  const DenseMatrix zero(3, 2);
  CHECK(clip_rows(zero, 0.5) == zero);
  CHECK_THROWS_AS(clip_rows(m, 0.0), std::invalid_argument);
}

TEST_CASE("clip_rows never increases row norms") {
  RngState rng(5);
  const DenseMatrix m = random_matrix(8, 5, rng, 2.0);
  const double c = 0.7;
  const auto before = row_l2_norms(m);
  const auto after = row_l2_norms(clip_rows(m, c));
  for (std::size_t i = 0; i < after.size(); ++i) {
    CHECK(after[i] <= c * (1.0 + 1e-12));
    CHECK(after[i] <= before[i] + 1e-12);
  }
}

TEST_CASE("clip_frobenius examples and idempotence") {
  CHECK(clip_frobenius(DenseMatrix::identity(2), 2.0) == DenseMatrix::identity(2));
  const DenseMatrix m{{3.0, 0.0}, {0.0, 4.0}};
  const DenseMatrix c = clip_frobenius(m, 1.0);
  CHECK(c(0, 0) == doctest::Approx(0.6));
  CHECK(c(1, 1) == doctest::Approx(0.8));
  CHECK(clip_frobenius(c, 1.0) == c);
  RngState rng(9);
  const DenseMatrix r = random_matrix(6, 6, rng);
  CHECK(frobenius_norm(clip_frobenius(r, 0.3)) <= 0.3 * (1.0 + 1e-12));
}

TEST_CASE("norm examples") {
  CHECK(frobenius_norm(DenseMatrix::identity(3)) == doctest::Approx(std::sqrt(3.0)));
  CHECK(frobenius_norm(DenseMatrix(4, 4)) == 0.0);
  RngState rng(3);
  const DenseMatrix m = random_matrix(6, 4, rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) acc += m.data()[i] * m.data()[i];
  CHECK(std::fabs(frobenius_norm(m) - std::sqrt(acc)) <= 1e-12);
  const auto rows = row_l2_norms(m);
  double acc0 = 0.0;
  for (double v : m.row(2)) acc0 += v * v;
  CHECK(rows[2] == doctest::Approx(std::sqrt(acc0)));
}

TEST_CASE("rng determinism and independence") {
  RngState a(1234), b(1234);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  RngState c(1234), d(1235);
  bool all_equal = true;
  for (int i = 0; i < 16; ++i) all_equal = all_equal && c.next_u64() == d.next_u64();
  CHECK_FALSE(all_equal);
  RngState e(77);
  RngState f1 = e.fork(1), f2 = e.fork(2);
  CHECK(f1.next_u64() != f2.next_u64());
}

TEST_CASE("rng normal moments") {
  RngState rng(99);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  CHECK(std::fabs(s / n) < 0.01);
  CHECK(std::fabs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("svd reconstructs and pseudo-inverse solves") {
  RngState rng(31);
  for (int t = 0; t < 10; ++t) {
    const DenseMatrix a = random_matrix(4, 3, rng);
    const Svd s = svd(a);
    DenseMatrix us = s.u;
    for (std::size_t j = 0; j < s.sigma.size(); ++j) {
      for (std::size_t i = 0; i < us.rows(); ++i) us(i, j) *= s.sigma[j];
    }
    CHECK(frobenius_norm(matmul(us, s.v.transposed()) - a) <= 1e-10);
  }
  const DenseMatrix a = random_matrix(5, 3, rng);
  const DenseMatrix x_true = random_matrix(3, 2, rng);
  const DenseMatrix b = matmul(a, x_true);
  const DenseMatrix x = least_squares_min_norm(a, b);
  CHECK(frobenius_norm(matmul(a, x) - b) <= 1e-9);
}

}  // TEST_SUITE
