// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "p4gcn/fixed_point.hpp"
#include "p4gcn/matrix.hpp"
#include "p4gcn/paillier.hpp"

namespace p4gcn {

/// Matrix of Paillier ciphertexts. scale_exp tracks the accumulated
/// power-of-two fixed-point scale through plaintext multiplications;
/// plain_bound is a public upper bound on the decoded magnitude of any cell,
/// used only for overflow guarding.
struct CipherMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Ciphertext> cells;  // row-major
  int scale_exp = 0;
  std::uint64_t key_id = 0;
  double plain_bound = 0.0;

  Ciphertext& at(std::size_t i, std::size_t j) { return cells[i * cols + j]; }
  const Ciphertext& at(std::size_t i, std::size_t j) const { return cells[i * cols + j]; }
};

enum class ProductSide { Left, Right };

CipherMatrix enc_matrix(const PublicKey& pk, const DenseMatrix& m,
                        const FixedPointCodec& codec, RngState& rng);

DenseMatrix dec_matrix(const KeyPair& kp, const CipherMatrix& cm);

/// Left: out = plain * cm; Right: out = cm * plain. Each output cell is a
/// homomorphic sum of scalar products with plain encoded at codec.frac_bits,
/// so out.scale_exp = cm.scale_exp + frac_bits. Guards the accumulated
/// magnitude against the +-n/2 window and throws CodecOverflow beyond it.
CipherMatrix plain_cipher_product(const DenseMatrix& plain, const CipherMatrix& cm,
                                  ProductSide side, const PublicKey& pk,
                                  const FixedPointCodec& codec);

/// Cellwise homomorphic sum; shapes, keys and scales must match.
CipherMatrix cipher_matrix_add(const PublicKey& pk, const CipherMatrix& a,
                               const CipherMatrix& b);

/// Multiplies every cell's plaintext by 2^shift_bits, raising scale_exp by
/// shift_bits. Used to align scales before homomorphic updates.
CipherMatrix lift_scale(const PublicKey& pk, const CipherMatrix& cm, int shift_bits);

}  // namespace p4gcn
