// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include "p4gcn/fixed_point.hpp"

#include <cmath>

namespace p4gcn {

double FixedPointCodec::resolution() const { return std::ldexp(1.0, -frac_bits); }

mpz_class encode_fixed(double x, const FixedPointCodec& codec, const mpz_class& n) {
  if (!std::isfinite(x)) throw CodecOverflow("encode: non-finite value");
  if (std::fabs(x) > codec.max_abs_value) {
    throw CodecOverflow("encode: value outside codec window");
  }
  const double scaled = std::ldexp(x, codec.frac_bits);
  if (std::fabs(scaled) >= std::ldexp(1.0, 62)) {
    throw CodecOverflow("encode: scaled value exceeds 62 bits");
  }
  const long long v = std::llround(scaled);
  const unsigned long long a = static_cast<unsigned long long>(v < 0 ? -v : v);
  mpz_class mag(static_cast<unsigned long>(a >> 32));
  mag <<= 32;
  mag += static_cast<unsigned long>(a & 0xffffffffULL);
  if (2 * mag >= n) throw CodecOverflow("encode: value exceeds modulus window");
  if (v < 0) return n - mag;
  return mag;
}

double decode_fixed(const mpz_class& v, int scale_exp, const mpz_class& n) {
  mpz_class centered = v % n;
  if (centered < 0) centered += n;
  if (2 * centered > n) centered -= n;
  return std::ldexp(centered.get_d(), -scale_exp);
}

}  // namespace p4gcn
