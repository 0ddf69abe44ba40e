// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>
#include <cstring>

#include "p4gcn/kernels.hpp"

namespace p4gcn::kern {

void matmul_neon(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = ai[kk];
      const double* bk = b + kk * n;
      const float64x2_t avv = vdupq_n_f64(av);
      std::size_t j = 0;
      for (; j + 2 <= n; j += 2) {
        float64x2_t acc = vld1q_f64(ci + j);
        acc = vfmaq_f64(acc, avv, vld1q_f64(bk + j));
        vst1q_f64(ci + j, acc);
      }
      for (; j < n; ++j) {
        ci[j] = std::fma(av, bk[j], ci[j]);
      }
    }
  }
}

}  // namespace p4gcn::kern

#endif
