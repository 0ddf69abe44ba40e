// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace p4gcn::kern {

// C = A * B with A: m x k, B: k x n, C: m x n, all row-major and
// non-overlapping. Every variant accumulates along k in the same order and
// uses fused multiply-add per term, so all variants produce bit-identical
// output for finite inputs.
using MatmulFn = void (*)(const double* a, const double* b, double* c,
                          std::size_t m, std::size_t k, std::size_t n);

void matmul_scalar(const double* a, const double* b, double* c,
                   std::size_t m, std::size_t k, std::size_t n);

#if defined(__x86_64__) || defined(_M_X64)
void matmul_avx2(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n);
#endif
#if defined(__aarch64__)
void matmul_neon(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n);
#endif

// Selected at first use from CPU features; the P4GCN_KERNEL environment
// variable (scalar|avx2|neon) overrides.
MatmulFn active_matmul();
const char* active_kernel_name();

// Names of every variant compiled in and runnable on this machine.
std::vector<std::string> runnable_kernels();
MatmulFn kernel_by_name(const std::string& name);  // nullptr if not runnable

}  // namespace p4gcn::kern
