// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include "p4gcn/sandwich.hpp"

#include <cmath>

#include "p4gcn/svd.hpp"
#include "p4gcn/wire.hpp"

namespace p4gcn {

namespace {

constexpr std::uint8_t kOk = 0;

// Minimal side-party service for the one-shot triple product: accepts the
// encrypted middle, answers a single forward request with L [M] N + Z.
class AdhocSide {
 public:
  AdhocSide(const SideHolder& side, CipherMode mode)
      : side_(side), mode_(mode), rng_(RngState(side.noise_seed).fork(0x5a)) {}

  Frame handle(const Frame& req) {
    ByteWriter w;
    switch (req.tag) {
      case MsgTag::PubKey: {
        ByteReader r(req.payload);
        pk_ = read_public_key(r);
        w.u8(kOk);
        return {MsgTag::PubKey, w.take()};
      }
      case MsgTag::EncState: {
        ByteReader r(req.payload);
        if (mode_ == CipherMode::RealHe) {
          mid_he_ = read_cipher_matrix(r, side_.codec.max_abs_value);
        } else {
          mid_plain_ = read_dense_matrix(r);
        }
        w.u8(kOk);
        return {MsgTag::EncState, w.take()};
      }
      case MsgTag::FwdReq: {
        w.u8(kOk);
        if (mode_ == CipherMode::RealHe) {
          CipherMatrix out = plain_cipher_product(side_.l, *mid_he_, ProductSide::Left,
                                                  *pk_, side_.codec);
          out = plain_cipher_product(side_.n, out, ProductSide::Right, *pk_, side_.codec);
          if (side_.row_sigma) {
            out = cipher_matrix_add(
                *pk_, out, enc_matrix_at_scale(*pk_, sample_noise(out.rows, out.cols),
                                               out.scale_exp, rng_));
          }
          write_cipher_matrix(w, out);
        } else {
          DenseMatrix out = matmul(matmul(side_.l, *mid_plain_), side_.n);
          if (side_.row_sigma) out += sample_noise(out.rows(), out.cols());
          write_dense_matrix(w, out);
        }
        return {MsgTag::FwdResp, w.take()};
      }
      case MsgTag::Bye: {
        w.u8(kOk);
        return {MsgTag::Bye, w.take()};
      }
      default:
        throw ProtocolError("sandwich: unexpected tag");
    }
  }

 private:
  DenseMatrix sample_noise(std::size_t rows, std::size_t cols) {
    DenseMatrix z(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
      const double s = (*side_.row_sigma)[i];
      for (double& v : z.row(i)) v = s * rng_.normal();
    }
    return z;
  }

  const SideHolder& side_;
  CipherMode mode_;
  RngState rng_;
  std::optional<PublicKey> pk_;
  std::optional<CipherMatrix> mid_he_;
  std::optional<DenseMatrix> mid_plain_;
};

void check_ok(const Frame& f) {
  ByteReader r(f.payload);
  if (r.u8() != kOk) throw ProtocolError("sandwich: peer refused");
}

}  // namespace

DenseMatrix sandwich_multiply(const SideHolder& side, const MiddleHolder& middle,
                              CipherMode mode, Transport* transport,
                              TransportCounters* counters_out) {
  if (side.l.cols() != middle.m.rows() || middle.m.cols() != side.n.rows()) {
    throw std::invalid_argument("sandwich_multiply: shapes do not conform");
  }
  if (side.row_sigma && side.row_sigma->size() != side.l.rows()) {
    throw std::invalid_argument("sandwich_multiply: noise plan row mismatch");
  }
  AdhocSide server(side, mode);
  std::unique_ptr<Transport> local;
  if (transport == nullptr) {
    local = std::make_unique<LoopTransport>(
        [&server](const Frame& f) { return server.handle(f); });
    transport = local.get();
  }
  RngState enc_rng = RngState(middle.enc_seed).fork(0x6d);

  if (mode == CipherMode::RealHe) {
    if (!middle.keys) throw ProtocolError("sandwich_multiply: missing key pair");
    ByteWriter kw;
    write_public_key(kw, middle.keys->pub);
    transport->send({MsgTag::PubKey, kw.take()});
    check_ok(transport->recv());
  }

  ByteWriter sw;
  if (mode == CipherMode::RealHe) {
    write_cipher_matrix(sw, enc_matrix(middle.keys->pub, middle.m, middle.codec, enc_rng));
  } else {
    write_dense_matrix(sw, middle.m);
  }
  transport->send({MsgTag::EncState, sw.take()});
  check_ok(transport->recv());

  transport->send({MsgTag::FwdReq, {}});
  Frame resp = transport->recv();
  if (resp.tag != MsgTag::FwdResp) throw ProtocolError("sandwich: bad response tag");
  ByteReader r(resp.payload);
  if (r.u8() != kOk) throw ProtocolError("sandwich: peer refused");
  DenseMatrix out;
  if (mode == CipherMode::RealHe) {
    out = dec_matrix(*middle.keys, read_cipher_matrix(r, side.codec.max_abs_value));
  } else {
    out = read_dense_matrix(r);
  }

  transport->send({MsgTag::Bye, {}});
  check_ok(transport->recv());
  if (counters_out != nullptr) *counters_out = transport->counters();
  return out;
}

void apply_stored_update(const PublicKey& pk, const FixedPointCodec& codec,
                         CipherMatrix& state, const CipherMatrix& delta, double eta,
                         std::span<const std::size_t> rows) {
  if (state.key_id != delta.key_id || state.key_id != pk.key_id) {
    throw KeyMismatch("apply_stored_update: key mismatch");
  }
  if (rows.size() != delta.rows || delta.cols != state.cols) {
    throw std::invalid_argument("apply_stored_update: shape mismatch");
  }
  if (eta == 0.0) return;

  CipherMatrix effective = delta;
  if (eta != 1.0) {
    const mpz_class k = encode_fixed(eta, codec, pk.n);
    for (auto& c : effective.cells) c = scalar_mul(pk, c, k);
    effective.scale_exp += codec.frac_bits;
    effective.plain_bound *= std::fabs(eta) + codec.resolution();
  }
  if (state.scale_exp < effective.scale_exp) {
    state = lift_scale(pk, state, effective.scale_exp - state.scale_exp);
  } else if (state.scale_exp > effective.scale_exp) {
    throw std::invalid_argument("apply_stored_update: delta scale below state scale");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= state.rows) throw std::out_of_range("apply_stored_update: row");
    for (std::size_t j = 0; j < state.cols; ++j) {
      Ciphertext neg = effective.at(i, j);
      if (mpz_invert(neg.value.get_mpz_t(), neg.value.get_mpz_t(),
                     pk.n_squared.get_mpz_t()) == 0) {
        throw CryptoError("apply_stored_update: non-invertible ciphertext");
      }
      state.at(rows[i], j) = add(pk, state.at(rows[i], j), neg);
    }
  }
  state.plain_bound += effective.plain_bound;
}

PerturbedFactors perturb_factorization(const DenseMatrix& l, const DenseMatrix& m,
                                       const DenseMatrix& n,
                                       std::pair<std::size_t, std::size_t> position,
                                       double magnitude, double residual_tol) {
  if (position.first >= l.rows() || position.second >= l.cols()) {
    throw std::out_of_range("perturb_factorization: position outside L");
  }
  if (magnitude == 0.0) {
    throw std::invalid_argument("perturb_factorization: zero magnitude");
  }
  const DenseMatrix j = matmul(matmul(l, m), n);
  PerturbedFactors out;
  out.l_prime = l;
  out.l_prime(position.first, position.second) += magnitude;
  const DenseMatrix lm = matmul(out.l_prime, m);
  out.n_prime = least_squares_min_norm(lm, j);
  out.residual = frobenius_norm(matmul(lm, out.n_prime) - j);
  if (!(out.residual <= residual_tol)) {
    throw RankConditionError("perturb_factorization: rank condition failed at this magnitude");
  }
  return out;
}

}  // namespace p4gcn
