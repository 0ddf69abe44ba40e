// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <gmpxx.h>

#include <cstdint>

#include "p4gcn/paillier.hpp"

namespace p4gcn {

/// Signed fixed-point codec mapping reals into Z_n. Magnitudes are encoded
/// as round(x * 2^frac_bits); negatives use the upper-half convention
/// (n - |v|), which additive homomorphism preserves.
struct FixedPointCodec {
  int frac_bits = 40;
  /// Largest |x| a single encoded value may carry. Together with frac_bits
  /// and accumulated product scales this bounds values away from the +-n/2
  /// wrap point.
  double max_abs_value = 1.0e6;

  double resolution() const;  // 2^-frac_bits
};

/// v in [0, n). Throws CodecOverflow when |x| exceeds the codec window or
/// |x| * 2^f leaves the representable range.
mpz_class encode_fixed(double x, const FixedPointCodec& codec, const mpz_class& n);

/// Inverse of encode_fixed generalized to accumulated scales: interprets v
/// (mod n, upper half negative) as value * 2^-scale_exp.
double decode_fixed(const mpz_class& v, int scale_exp, const mpz_class& n);

}  // namespace p4gcn
