// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "p4gcn/kernels.hpp"

namespace p4gcn::kern {

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

struct Selected {
  MatmulFn fn;
  const char* name;
};

Selected select() {
  const char* env = std::getenv("P4GCN_KERNEL");
  if (env != nullptr) {
    if (MatmulFn fn = kernel_by_name(env); fn != nullptr) {
      static std::string held;
      held = env;
      return {fn, held.c_str()};
    }
    // Unknown or non-runnable override falls through to auto selection.
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (cpu_has_avx2_fma()) return {&matmul_avx2, "avx2"};
#endif
#if defined(__aarch64__)
  return {&matmul_neon, "neon"};
#endif
  return {&matmul_scalar, "scalar"};
}

const Selected& selected() {
  static const Selected s = select();
  return s;
}

}  // namespace

MatmulFn active_matmul() { return selected().fn; }

const char* active_kernel_name() { return selected().name; }

std::vector<std::string> runnable_kernels() {
  std::vector<std::string> out{"scalar"};
#if defined(__x86_64__) || defined(_M_X64)
  if (cpu_has_avx2_fma()) out.emplace_back("avx2");
#endif
#if defined(__aarch64__)
  out.emplace_back("neon");
#endif
  return out;
}

MatmulFn kernel_by_name(const std::string& name) {
  if (name == "scalar") return &matmul_scalar;
#if defined(__x86_64__) || defined(_M_X64)
  if (name == "avx2" && cpu_has_avx2_fma()) return &matmul_avx2;
#endif
#if defined(__aarch64__)
  if (name == "neon") return &matmul_neon;
#endif
  return nullptr;
}

}  // namespace p4gcn::kern
