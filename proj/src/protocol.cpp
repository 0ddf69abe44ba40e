// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include "p4gcn/protocol.hpp"

#include <cmath>

#include "p4gcn/sandwich.hpp"
#include "p4gcn/wire.hpp"

namespace p4gcn {

namespace {

constexpr std::uint8_t kOk = 0;
constexpr std::uint8_t kBudgetExceeded = 1;
constexpr std::uint8_t kOrderViolation = 2;
constexpr std::uint8_t kBadRequest = 3;

constexpr std::uint64_t kW2StreamTag = 0x5732;
constexpr std::uint64_t kNoiseStreamTag = 0x4e5a;
constexpr std::uint64_t kEncStreamTag = 0x454e;
constexpr std::uint64_t kServerEncStreamTag = 0x5345;

void write_status(ByteWriter& w, std::uint8_t code, const std::string& msg = {}) {
  w.u8(code);
  if (code != kOk) {
    w.u32(static_cast<std::uint32_t>(msg.size()));
    for (char c : msg) w.u8(static_cast<std::uint8_t>(c));
  }
}

[[noreturn]] void throw_status(std::uint8_t code, const std::string& msg) {
  if (code == kBudgetExceeded) throw BudgetExceeded("peer refused: " + msg);
  throw ProtocolError("peer refused: " + msg);
}

std::string read_error(ByteReader& r) {
  const std::uint32_t len = r.u32();
  std::string msg;
  msg.reserve(len);
  for (std::uint32_t i = 0; i < len; ++i) msg.push_back(static_cast<char>(r.u8()));
  return msg;
}

}  // namespace

void write_protocol_config(ByteWriter& w, const ProtocolConfig& cfg) {
  w.u32(cfg.version);
  w.u8(static_cast<std::uint8_t>(cfg.cipher));
  w.u8(cfg.dp ? 1 : 0);
  w.u8(cfg.stored_state ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(cfg.frac_bits));
  w.f64(cfg.codec_window);
  w.f64(cfg.clip_c);
  w.f64(cfg.epsilon);
  w.f64(cfg.delta);
  w.u64(cfg.queries_planned);
  w.u64(cfg.noise_seed);
  w.u32(cfg.feature_dim);
}

ProtocolConfig read_protocol_config(ByteReader& r) {
  ProtocolConfig cfg;
  cfg.version = r.u32();
  cfg.cipher = static_cast<CipherMode>(r.u8());
  cfg.dp = r.u8() != 0;
  cfg.stored_state = r.u8() != 0;
  cfg.frac_bits = static_cast<int>(r.u32());
  cfg.codec_window = r.f64();
  cfg.clip_c = r.f64();
  cfg.epsilon = r.f64();
  cfg.delta = r.f64();
  cfg.queries_planned = r.u64();
  cfg.noise_seed = r.u64();
  cfg.feature_dim = r.u32();
  return cfg;
}

CipherMatrix enc_matrix_at_scale(const PublicKey& pk, const DenseMatrix& m,
                                 int scale_exp, RngState& rng) {
  CipherMatrix out;
  out.rows = m.rows();
  out.cols = m.cols();
  out.scale_exp = scale_exp;
  out.key_id = pk.key_id;
  out.plain_bound = std::max(max_abs(m), std::ldexp(1.0, -scale_exp));
  out.cells.reserve(m.size());
  const mpz_class half = pk.half_n();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double x = m(i, j);
      if (!std::isfinite(x)) throw CodecOverflow("enc_matrix_at_scale: non-finite");
      mpz_class mag;
      mpz_set_d(mag.get_mpz_t(), std::fabs(std::ldexp(x, scale_exp)));
      if (mag >= half) throw CodecOverflow("enc_matrix_at_scale: window exceeded");
      const mpz_class v = x < 0.0 ? mpz_class(pk.n - mag) : mag;
      out.cells.push_back(encrypt(pk, v, rng));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Server
// ---------------------------------------------------------------------------

SocialPartyServer::SocialPartyServer(SocialGraph graph, std::uint32_t feature_dim,
                                     double clip_c, bool scale_lap_by_inverse_n,
                                     std::uint64_t seed)
    : graph_(std::move(graph)),
      d_(feature_dim),
      clip_c_(clip_c),
      scale_lap_(scale_lap_by_inverse_n),
      accountant_(graph_.n_users()),
      noise_rng_(RngState(seed).fork(kNoiseStreamTag)),
      enc_rng_(RngState(seed).fork(kServerEncStreamTag)) {
  if (!graph_.finalized()) graph_.finalize();
  lap_ = normalized_laplacian(graph_, scale_lap_);
  RngState w2_rng = RngState(seed).fork(kW2StreamTag);
  DenseMatrix w2(d_, d_);
  for (std::size_t i = 0; i < w2.size(); ++i) w2.data()[i] = 0.1 * w2_rng.normal();
  w2_ = clip_frobenius(w2, clip_c_);  // clipped once, frozen for the run
  w2_t_ = w2_.transposed();
  profile_ = SensitivityProfile::build(graph_, clip_c_, scale_lap_);
}

Frame SocialPartyServer::fail(MsgTag tag, std::uint8_t code, const std::string& msg) {
  if (code != kBudgetExceeded) failed_ = true;
  MsgTag resp = tag;
  if (tag == MsgTag::FwdReq) resp = MsgTag::FwdResp;
  if (tag == MsgTag::BwdReq) resp = MsgTag::BwdResp;
  ByteWriter w;
  write_status(w, code, msg);
  return Frame{resp, w.take()};
}

DenseMatrix SocialPartyServer::noise_for(const BatchSelector& sel) {
  const NoisePlan plan = NoisePlan::make(profile_, budget_->b_query, sel.indices(), d_);
  return plan.sample(noise_rng_);
}

bool SocialPartyServer::would_exceed_budget(const BatchSelector& sel) const {
  const double per_query = 0.5 * budget_->b_query * budget_->b_query;
  double max_eta = accountant_.max_eta();
  for (std::size_t u : sel.indices()) {
    max_eta = std::max(max_eta, accountant_.eta(u) + per_query);
  }
  return epsilon_for_privacy_loss(max_eta, cfg_.delta) > cfg_.epsilon + 1e-6;
}

void SocialPartyServer::charge(const BatchSelector& sel) {
  const NoisePlan plan = NoisePlan::make(profile_, budget_->b_query, sel.indices(), d_);
  const auto idx = sel.indices();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    accountant_.record(idx[i], profile_.scaled_bound(idx[i]), plan.row_sigma[i]);
  }
  accountant_.bump_query_counter();
}

Frame SocialPartyServer::handle(const Frame& request) {
  try {
    return handle_checked(request);
  } catch (const BudgetExceeded& e) {
    return fail(request.tag, kBudgetExceeded, e.what());
  } catch (const std::exception& e) {
    return fail(request.tag, kBadRequest, e.what());
  }
}

Frame SocialPartyServer::handle_checked(const Frame& request) {
  ByteReader r(request.payload);
  if (failed_) return fail(request.tag, kOrderViolation, "session already failed");

  switch (request.tag) {
    case MsgTag::Hello: {
      if (hello_done_) return fail(request.tag, kOrderViolation, "duplicate hello");
      ProtocolConfig cfg = read_protocol_config(r);
      r.expect_done();
      if (cfg.version != 1) return fail(request.tag, kBadRequest, "unsupported version");
      if (cfg.feature_dim != d_) return fail(request.tag, kBadRequest, "feature_dim mismatch");
      if (cfg.clip_c != clip_c_) return fail(request.tag, kBadRequest, "clip mismatch");
      if (cfg.dp) {
        budget_ = DpBudget::calibrate(cfg.epsilon, cfg.delta, cfg.queries_planned);
      }
      cfg_ = cfg;
      hello_done_ = true;
      ByteWriter w;
      write_status(w, kOk);
      w.u32(static_cast<std::uint32_t>(graph_.n_users()));
      return Frame{MsgTag::Hello, w.take()};
    }

    case MsgTag::PubKey: {
      if (!hello_done_) return fail(request.tag, kOrderViolation, "pubkey before hello");
      if (cfg_.cipher != CipherMode::RealHe) {
        return fail(request.tag, kBadRequest, "pubkey in plaintext mode");
      }
      client_pk_ = read_public_key(r);
      r.expect_done();
      key_done_ = true;
      ByteWriter w;
      write_status(w, kOk);
      return Frame{MsgTag::PubKey, w.take()};
    }

    case MsgTag::EncState: {
      if (!hello_done_) return fail(request.tag, kOrderViolation, "state before hello");
      if (cfg_.cipher == CipherMode::RealHe) {
        if (!key_done_) return fail(request.tag, kOrderViolation, "state before pubkey");
        CipherMatrix st = read_cipher_matrix(r, cfg_.codec_window);
        r.expect_done();
        if (st.rows != graph_.n_users() || st.cols != d_) {
          return fail(request.tag, kBadRequest, "state shape mismatch");
        }
        if (st.key_id != client_pk_->key_id) {
          return fail(request.tag, kBadRequest, "state under unknown key");
        }
        state_he_ = std::move(st);
      } else {
        DenseMatrix st = read_dense_matrix(r);
        r.expect_done();
        if (st.rows() != graph_.n_users() || st.cols() != d_) {
          return fail(request.tag, kBadRequest, "state shape mismatch");
        }
        state_plain_ = std::move(st);
      }
      ByteWriter w;
      write_status(w, kOk);
      return Frame{MsgTag::EncState, w.take()};
    }

    case MsgTag::FwdReq: {
      if (!hello_done_) return fail(request.tag, kOrderViolation, "query before hello");
      if (!state_he_ && !state_plain_) {
        return fail(request.tag, kOrderViolation, "query before state");
      }
      const QueryPurpose purpose = static_cast<QueryPurpose>(r.u8());
      BatchSelector sel(read_index_list(r), graph_.n_users());
      r.expect_done();
      const bool noisy = cfg_.dp && purpose == QueryPurpose::Train;
      if (noisy && would_exceed_budget(sel)) {
        return fail(request.tag, kBudgetExceeded, "privacy budget exhausted");
      }
      const DenseMatrix lb = batch_rows(lap_, sel);
      ByteWriter w;
      write_status(w, kOk);
      if (cfg_.cipher == CipherMode::RealHe) {
        const FixedPointCodec codec = cfg_.codec();
        CipherMatrix out = plain_cipher_product(lb, *state_he_, ProductSide::Left,
                                                *client_pk_, codec);
        out = plain_cipher_product(w2_, out, ProductSide::Right, *client_pk_, codec);
        if (noisy) {
          const DenseMatrix z = noise_for(sel);
          out = cipher_matrix_add(*client_pk_, out,
                                  enc_matrix_at_scale(*client_pk_, z, out.scale_exp,
                                                      enc_rng_));
        }
        write_cipher_matrix(w, out);
      } else {
        DenseMatrix out = matmul(matmul(lb, *state_plain_), w2_);
        if (noisy) out += noise_for(sel);
        write_dense_matrix(w, out);
      }
      if (noisy) charge(sel);
      return Frame{MsgTag::FwdResp, w.take()};
    }

    case MsgTag::BwdReq: {
      if (!hello_done_) return fail(request.tag, kOrderViolation, "query before hello");
      if (cfg_.cipher == CipherMode::RealHe && !key_done_) {
        return fail(request.tag, kOrderViolation, "query before pubkey");
      }
      BatchSelector sel(read_index_list(r), graph_.n_users());
      const bool noisy = cfg_.dp;
      if (noisy && !budget_) return fail(request.tag, kBadRequest, "no budget");
      if (noisy && would_exceed_budget(sel)) {
        return fail(request.tag, kBudgetExceeded, "privacy budget exhausted");
      }
      const DenseMatrix lbb = batch_block(lap_, sel);
      ByteWriter w;
      write_status(w, kOk);
      if (cfg_.cipher == CipherMode::RealHe) {
        const FixedPointCodec codec = cfg_.codec();
        CipherMatrix mid = read_cipher_matrix(r, cfg_.clip_c);
        r.expect_done();
        if (mid.rows != sel.size() || mid.cols != d_) {
          return fail(request.tag, kBadRequest, "middle shape mismatch");
        }
        CipherMatrix out =
            plain_cipher_product(lbb, mid, ProductSide::Left, *client_pk_, codec);
        out = plain_cipher_product(w2_t_, out, ProductSide::Right, *client_pk_, codec);
        if (noisy) {
          const DenseMatrix z = noise_for(sel);
          out = cipher_matrix_add(*client_pk_, out,
                                  enc_matrix_at_scale(*client_pk_, z, out.scale_exp,
                                                      enc_rng_));
        }
        if (cfg_.stored_state && state_he_) {
          // Fold the batch update into the stored ciphertext rows; rows of
          // users outside the batch stay bit-identical. The learning rate is
          // already folded into the middle matrix the client sent.
          apply_stored_update(*client_pk_, cfg_.codec(), *state_he_, out, 1.0,
                              sel.indices());
        }
        write_cipher_matrix(w, out);
      } else {
        DenseMatrix mid = read_dense_matrix(r);
        r.expect_done();
        if (mid.rows() != sel.size() || mid.cols() != d_) {
          return fail(request.tag, kBadRequest, "middle shape mismatch");
        }
        DenseMatrix out = matmul(matmul(lbb, mid), w2_t_);
        if (noisy) out += noise_for(sel);
        if (cfg_.stored_state && state_plain_) {
          const auto idx = sel.indices();
          for (std::size_t i = 0; i < idx.size(); ++i) {
            for (std::size_t j = 0; j < d_; ++j) {
              (*state_plain_)(idx[i], j) -= out(i, j);
            }
          }
        }
        write_dense_matrix(w, out);
      }
      if (noisy) charge(sel);
      return Frame{MsgTag::BwdResp, w.take()};
    }

    case MsgTag::Update: {
      if (!hello_done_) return fail(request.tag, kOrderViolation, "update before hello");
      if (!state_he_ && !state_plain_) {
        return fail(request.tag, kOrderViolation, "update before state");
      }
      BatchSelector sel(read_index_list(r), graph_.n_users());
      ByteWriter w;
      if (cfg_.cipher == CipherMode::RealHe) {
        const double eta_v = r.f64();
        CipherMatrix delta = read_cipher_matrix(r, cfg_.codec_window);
        r.expect_done();
        if (delta.rows != sel.size() || delta.cols != d_) {
          return fail(request.tag, kBadRequest, "delta shape mismatch");
        }
        apply_stored_update(*client_pk_, cfg_.codec(), *state_he_, delta, eta_v,
                            sel.indices());
      } else {
        const double eta_v = r.f64();
        DenseMatrix delta = read_dense_matrix(r);
        r.expect_done();
        if (delta.rows() != sel.size() || delta.cols() != d_) {
          return fail(request.tag, kBadRequest, "delta shape mismatch");
        }
        if (eta_v != 0.0) {
          const auto idx = sel.indices();
          for (std::size_t i = 0; i < idx.size(); ++i) {
            for (std::size_t j = 0; j < d_; ++j) {
              (*state_plain_)(idx[i], j) -= eta_v * delta(i, j);
            }
          }
        }
      }
      write_status(w, kOk);
      return Frame{MsgTag::Update, w.take()};
    }

    case MsgTag::Bye: {
      ByteWriter w;
      write_status(w, kOk);
      w.u32(static_cast<std::uint32_t>(graph_.n_users()));
      for (double e : accountant_.per_user_eta()) w.f64(e);
      w.f64(cfg_.dp ? accountant_.epsilon(cfg_.delta) : 0.0);
      w.u64(accountant_.queries());
      return Frame{MsgTag::Bye, w.take()};
    }

    default:
      return fail(request.tag, kBadRequest, "unexpected tag");
  }
}

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

RecommenderLink::RecommenderLink(std::unique_ptr<Transport> transport,
                                 ProtocolConfig cfg, std::uint64_t enc_seed)
    : transport_(std::move(transport)),
      cfg_(cfg),
      enc_seed_(enc_seed),
      enc_rng_(RngState(enc_seed).fork(kEncStreamTag)) {}

Frame RecommenderLink::roundtrip(const Frame& f) {
  transport_->send(f);
  return transport_->recv();
}

void RecommenderLink::open(int key_bits) {
  if (cfg_.cipher == CipherMode::RealHe) {
    RngState key_rng = RngState(enc_seed_).fork(0x4b45);
    open_with_keys(std::make_shared<KeyPair>(keygen(key_bits, key_rng)));
    return;
  }
  open_with_keys(nullptr);
}

void RecommenderLink::open_with_keys(std::shared_ptr<const KeyPair> keys) {
  keys_ = std::move(keys);
  ByteWriter w;
  write_protocol_config(w, cfg_);
  Frame resp = roundtrip(Frame{MsgTag::Hello, w.take()});
  ByteReader r(resp.payload);
  if (const std::uint8_t st = r.u8(); st != kOk) throw_status(st, read_error(r));
  r.u32();  // n_users echo
  if (cfg_.cipher == CipherMode::RealHe) {
    if (!keys_) throw ProtocolError("real-HE session requires a key pair");
    ByteWriter kw;
    write_public_key(kw, keys_->pub);
    Frame kresp = roundtrip(Frame{MsgTag::PubKey, kw.take()});
    ByteReader kr(kresp.payload);
    if (const std::uint8_t st = kr.u8(); st != kOk) throw_status(st, read_error(kr));
  }
  open_ = true;
}

void RecommenderLink::push_state(const DenseMatrix& x) {
  if (!open_) throw ProtocolError("push_state before open");
  ByteWriter w;
  if (cfg_.cipher == CipherMode::RealHe) {
    write_cipher_matrix(w, enc_matrix(keys_->pub, x, cfg_.codec(), enc_rng_));
  } else {
    write_dense_matrix(w, x);
  }
  tally_.state_cells += x.size();
  Frame resp = roundtrip(Frame{MsgTag::EncState, w.take()});
  ByteReader r(resp.payload);
  if (const std::uint8_t st = r.u8(); st != kOk) throw_status(st, read_error(r));
}

DenseMatrix RecommenderLink::read_result_matrix(ByteReader& r) {
  if (cfg_.cipher == CipherMode::RealHe) {
    CipherMatrix cm = read_cipher_matrix(r, cfg_.codec_window);
    return dec_matrix(*keys_, cm);
  }
  return read_dense_matrix(r);
}

DenseMatrix RecommenderLink::forward(std::span<const std::size_t> users,
                                     QueryPurpose purpose) {
  if (!open_) throw ProtocolError("forward before open");
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(purpose));
  write_index_list(w, users);
  Frame resp = roundtrip(Frame{MsgTag::FwdReq, w.take()});
  if (resp.tag != MsgTag::FwdResp) throw ProtocolError("unexpected response tag");
  ByteReader r(resp.payload);
  if (const std::uint8_t st = r.u8(); st != kOk) throw_status(st, read_error(r));
  DenseMatrix out = read_result_matrix(r);
  if (purpose == QueryPurpose::Train) {
    tally_.train_cells += out.size();
    ++tally_.train_queries;
  } else {
    tally_.eval_cells += out.size();
    ++tally_.eval_queries;
  }
  return out;
}

DenseMatrix RecommenderLink::backward(std::span<const std::size_t> users,
                                      const DenseMatrix& mid) {
  if (!open_) throw ProtocolError("backward before open");
  ByteWriter w;
  write_index_list(w, users);
  if (cfg_.cipher == CipherMode::RealHe) {
    write_cipher_matrix(w, enc_matrix(keys_->pub, mid, cfg_.codec(), enc_rng_));
  } else {
    write_dense_matrix(w, mid);
  }
  tally_.train_cells += mid.size();
  Frame resp = roundtrip(Frame{MsgTag::BwdReq, w.take()});
  if (resp.tag != MsgTag::BwdResp) throw ProtocolError("unexpected response tag");
  ByteReader r(resp.payload);
  if (const std::uint8_t st = r.u8(); st != kOk) throw_status(st, read_error(r));
  DenseMatrix out = read_result_matrix(r);
  tally_.train_cells += out.size();
  ++tally_.train_queries;
  return out;
}

void RecommenderLink::push_update(std::span<const std::size_t> rows, double eta,
                                  const DenseMatrix& delta) {
  if (!open_) throw ProtocolError("push_update before open");
  ByteWriter w;
  write_index_list(w, rows);
  w.f64(eta);
  if (cfg_.cipher == CipherMode::RealHe) {
    write_cipher_matrix(w, enc_matrix(keys_->pub, delta, cfg_.codec(), enc_rng_));
  } else {
    write_dense_matrix(w, delta);
  }
  tally_.update_cells += delta.size();
  Frame resp = roundtrip(Frame{MsgTag::Update, w.take()});
  ByteReader r(resp.payload);
  if (const std::uint8_t st = r.u8(); st != kOk) throw_status(st, read_error(r));
}

AccountantExport RecommenderLink::bye() {
  Frame resp = roundtrip(Frame{MsgTag::Bye, {}});
  ByteReader r(resp.payload);
  if (const std::uint8_t st = r.u8(); st != kOk) throw_status(st, read_error(r));
  AccountantExport out;
  const std::uint32_t n = r.u32();
  out.per_user_eta.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) out.per_user_eta.push_back(r.f64());
  out.final_epsilon = r.f64();
  out.queries = r.u64();
  open_ = false;
  return out;
}

}  // namespace p4gcn
