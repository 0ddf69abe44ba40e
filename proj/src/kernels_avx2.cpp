// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

// AVX2+FMA variant. Vectorizes across output columns; the k loop stays
// sequential per output element so results are bit-identical to the scalar
// reference (one fma rounding per accumulated term in both).

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "p4gcn/kernels.hpp"

namespace p4gcn::kern {

__attribute__((target("avx2,fma")))
void matmul_avx2(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n) {
  std::memset(c, 0, m * n * sizeof(double));
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = ai[kk];
      const double* bk = b + kk * n;
      const __m256d avv = _mm256_set1_pd(av);
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d acc = _mm256_loadu_pd(ci + j);
        acc = _mm256_fmadd_pd(avv, _mm256_loadu_pd(bk + j), acc);
        _mm256_storeu_pd(ci + j, acc);
      }
      for (; j < n; ++j) {
        ci[j] = std::fma(av, bk[j], ci[j]);
      }
    }
  }
}

}  // namespace p4gcn::kern

#endif
