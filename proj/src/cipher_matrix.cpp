// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include "p4gcn/cipher_matrix.hpp"

#include <cmath>

namespace p4gcn {

namespace {

void check_window(double bound, int scale_exp, const PublicKey& pk) {
  // Require bound * 2^scale < n / 2 with an 8-bit safety margin.
  const double bits = std::log2(std::max(bound, 1.0)) + scale_exp;
  if (bits + 8.0 >= static_cast<double>(pk.key_bits - 1)) {
    throw CodecOverflow("cipher matrix: accumulated scale exceeds modulus window");
  }
}

}  // namespace

CipherMatrix enc_matrix(const PublicKey& pk, const DenseMatrix& m,
                        const FixedPointCodec& codec, RngState& rng) {
  CipherMatrix out;
  out.rows = m.rows();
  out.cols = m.cols();
  out.scale_exp = codec.frac_bits;
  out.key_id = pk.key_id;
  out.plain_bound = std::max(max_abs(m), codec.resolution());
  check_window(out.plain_bound, out.scale_exp, pk);
  out.cells.reserve(m.size());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      out.cells.push_back(encrypt(pk, encode_fixed(m(i, j), codec, pk.n), rng));
    }
  }
  return out;
}

DenseMatrix dec_matrix(const KeyPair& kp, const CipherMatrix& cm) {
  if (cm.key_id != kp.pub.key_id) throw KeyMismatch("dec_matrix: wrong key");
  DenseMatrix out(cm.rows, cm.cols);
  for (std::size_t i = 0; i < cm.rows; ++i) {
    for (std::size_t j = 0; j < cm.cols; ++j) {
      out(i, j) = decode_fixed(decrypt(kp, cm.at(i, j)), cm.scale_exp, kp.pub.n);
    }
  }
  return out;
}

CipherMatrix plain_cipher_product(const DenseMatrix& plain, const CipherMatrix& cm,
                                  ProductSide side, const PublicKey& pk,
                                  const FixedPointCodec& codec) {
  if (cm.key_id != pk.key_id) throw KeyMismatch("plain_cipher_product: wrong key");
  const bool left = side == ProductSide::Left;
  const std::size_t out_rows = left ? plain.rows() : cm.rows;
  const std::size_t out_cols = left ? cm.cols : plain.cols();
  const std::size_t inner = left ? plain.cols() : plain.rows();
  if ((left && inner != cm.rows) || (!left && cm.cols != inner)) {
    throw std::invalid_argument("plain_cipher_product: inner dimensions do not match");
  }

  CipherMatrix out;
  out.rows = out_rows;
  out.cols = out_cols;
  out.scale_exp = cm.scale_exp + codec.frac_bits;
  out.key_id = cm.key_id;
  out.plain_bound =
      static_cast<double>(inner) * std::max(max_abs(plain), codec.resolution()) *
      cm.plain_bound;
  check_window(out.plain_bound, out.scale_exp, pk);

  out.cells.assign(out_rows * out_cols, neutral_ciphertext());
  for (std::size_t i = 0; i < out_rows; ++i) {
    for (std::size_t j = 0; j < out_cols; ++j) {
      Ciphertext acc = neutral_ciphertext();
      for (std::size_t k = 0; k < inner; ++k) {
        const double coef = left ? plain(i, k) : plain(k, j);
        if (coef == 0.0) continue;
        const Ciphertext& cell = left ? cm.at(k, j) : cm.at(i, k);
        acc = add(pk, acc, scalar_mul(pk, cell, encode_fixed(coef, codec, pk.n)));
      }
      out.cells[i * out_cols + j] = acc;
    }
  }
  return out;
}

CipherMatrix cipher_matrix_add(const PublicKey& pk, const CipherMatrix& a,
                               const CipherMatrix& b) {
  if (a.key_id != b.key_id) throw KeyMismatch("cipher_matrix_add: key mismatch");
  if (a.rows != b.rows || a.cols != b.cols) {
    throw std::invalid_argument("cipher_matrix_add: shape mismatch");
  }
  if (a.scale_exp != b.scale_exp) {
    throw std::invalid_argument("cipher_matrix_add: scale mismatch");
  }
  CipherMatrix out = a;
  out.plain_bound = a.plain_bound + b.plain_bound;
  check_window(out.plain_bound, out.scale_exp, pk);
  for (std::size_t i = 0; i < out.cells.size(); ++i) {
    out.cells[i] = add(pk, a.cells[i], b.cells[i]);
  }
  return out;
}

CipherMatrix lift_scale(const PublicKey& pk, const CipherMatrix& cm, int shift_bits) {
  if (shift_bits < 0) throw std::invalid_argument("lift_scale: negative shift");
  if (shift_bits == 0) return cm;
  CipherMatrix out = cm;
  out.scale_exp += shift_bits;
  check_window(out.plain_bound, out.scale_exp, pk);
  mpz_class factor(1);
  factor <<= shift_bits;
  for (auto& cell : out.cells) cell = scalar_mul(pk, cell, factor);
  return out;
}

}  // namespace p4gcn
