// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <utility>

#include "p4gcn/cipher_matrix.hpp"
#include "p4gcn/matrix.hpp"
#include "p4gcn/protocol.hpp"
#include "p4gcn/transport.hpp"

namespace p4gcn {

/// Holder of the two side matrices. By construction it can carry a peer
/// public key but never a key pair, so this code path cannot decrypt.
struct SideHolder {
  DenseMatrix l;
  DenseMatrix n;
  FixedPointCodec codec;
  /// Per-output-row noise standard deviations; absent means dp off.
  std::optional<std::vector<double>> row_sigma;
  std::uint64_t noise_seed = 0;
};

/// Holder of the middle matrix and, in real-HE mode, the key pair.
struct MiddleHolder {
  DenseMatrix m;
  FixedPointCodec codec;
  std::shared_ptr<const KeyPair> keys;  // required for CipherMode::RealHe
  std::uint64_t enc_seed = 0;
};

/// One protocol round computing J' = L M N + Z, delivered to the middle
/// holder. The side holder sees only an encryption of M (or, in plaintext
/// simulation, is trusted not to look); the middle holder never sees L or N.
/// When `transport` is null an in-process loop transport is used; either way
/// the same frames are exchanged and counted.
DenseMatrix sandwich_multiply(const SideHolder& side, const MiddleHolder& middle,
                              CipherMode mode, Transport* transport = nullptr,
                              TransportCounters* counters_out = nullptr);

/// state[rows[i]] -= eta * delta[i] homomorphically. eta == 0 leaves the
/// state bit-identical; eta == 1 applies delta at its own scale (no extra
/// fixed-point factor); other values multiply by eta at codec precision,
/// raising delta's scale by codec.frac_bits. The whole state is lifted when
/// its scale trails the effective delta scale.
void apply_stored_update(const PublicKey& pk, const FixedPointCodec& codec,
                         CipherMatrix& state, const CipherMatrix& delta, double eta,
                         std::span<const std::size_t> rows);

struct RankConditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PerturbedFactors {
  DenseMatrix l_prime;
  DenseMatrix n_prime;
  double residual = 0.0;
};

/// Witness for the factorization ambiguity of J = L M N: perturbs one entry
/// of L and re-solves the right factor by minimum-norm least squares, so
/// L' M N' reproduces J while L' != L. Throws RankConditionError when the
/// perturbed system misses J beyond `residual_tol` (caller retries with a
/// smaller magnitude).
PerturbedFactors perturb_factorization(const DenseMatrix& l, const DenseMatrix& m,
                                       const DenseMatrix& n,
                                       std::pair<std::size_t, std::size_t> position,
                                       double magnitude, double residual_tol = 1e-8);

}  // namespace p4gcn
