// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include "p4gcn/kernels.hpp"

#include <cmath>
#include <cstring>

namespace p4gcn::kern {

void matmul_scalar(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = ai[kk];
      const double* bk = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) {
        ci[j] = std::fma(av, bk[j], ci[j]);
      }
    }
  }
}

}  // namespace p4gcn::kern
