// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "p4gcn/cipher_matrix.hpp"
#include "p4gcn/matrix.hpp"
#include "p4gcn/privacy.hpp"
#include "p4gcn/social_graph.hpp"
#include "p4gcn/transport.hpp"
#include "p4gcn/wire.hpp"

namespace p4gcn {

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BudgetExceeded : ProtocolError {
  using ProtocolError::ProtocolError;
};

enum class CipherMode : std::uint8_t { Plaintext = 0, RealHe = 1 };
enum class QueryPurpose : std::uint8_t { Train = 0, Eval = 1 };

/// Public session parameters. Both parties must agree on these; the Hello
/// exchange carries them and the server rejects mismatches with its own
/// configuration.
struct ProtocolConfig {
  std::uint32_t version = 1;
  CipherMode cipher = CipherMode::Plaintext;
  bool dp = false;
  /// Client keeps the encrypted user-feature state at the server and does
  /// not resend it per iteration; backward results are folded into it.
  bool stored_state = false;
  int frac_bits = 40;
  double codec_window = 1.0e6;
  double clip_c = 0.1;
  double epsilon = 0.0;
  double delta = 1.0e-4;
  std::uint64_t queries_planned = 0;
  /// Seed for the server's noise stream. Simulation determinism only; a
  /// deployment would draw from entropy.
  std::uint64_t noise_seed = 0;
  std::uint32_t feature_dim = 0;

  FixedPointCodec codec() const { return FixedPointCodec{frac_bits, codec_window}; }
};

struct AccountantExport {
  std::vector<double> per_user_eta;
  double final_epsilon = 0.0;
  std::uint64_t queries = 0;
};

/// The social platform's side of the protocol: owns the graph, the frozen
/// split weight W_P2 and the noise machinery. Never sees a secret key; in
/// real-HE mode it computes on ciphertext only.
class SocialPartyServer {
 public:
  SocialPartyServer(SocialGraph graph, std::uint32_t feature_dim, double clip_c,
                    bool scale_lap_by_inverse_n, std::uint64_t seed);

  /// The request/response state machine; strictly alternating by contract of
  /// the transports, strictly ordered by internal checks.
  Frame handle(const Frame& request);

  FrameHandler handler() {
    return [this](const Frame& f) { return handle(f); };
  }

  const DenseMatrix& w2() const { return w2_; }
  const NormalizedLaplacian& laplacian() const { return lap_; }
  const Accountant& accountant() const { return accountant_; }
  const SocialGraph& graph() const { return graph_; }

 private:
  Frame fail(MsgTag tag, std::uint8_t code, const std::string& msg);
  Frame handle_checked(const Frame& request);

  DenseMatrix noise_for(const BatchSelector& sel);
  void charge(const BatchSelector& sel);
  bool would_exceed_budget(const BatchSelector& sel) const;

  SocialGraph graph_;
  std::uint32_t d_;
  double clip_c_;
  bool scale_lap_;
  NormalizedLaplacian lap_;
  DenseMatrix w2_;
  DenseMatrix w2_t_;
  SensitivityProfile profile_;
  Accountant accountant_;
  RngState noise_rng_;
  RngState enc_rng_;  // encryption randomness, kept apart so the noise
                      // stream is identical across cipher modes

  // Session state
  bool hello_done_ = false;
  bool key_done_ = false;
  bool failed_ = false;
  ProtocolConfig cfg_;
  std::optional<DpBudget> budget_;
  std::optional<PublicKey> client_pk_;
  std::optional<CipherMatrix> state_he_;
  std::optional<DenseMatrix> state_plain_;
};

/// Running totals of matrix cells moved through the session, by purpose.
/// In real-HE mode each cell is one Paillier ciphertext; plaintext simulation
/// counts the cells the ciphertexts would occupy.
struct CommTally {
  std::uint64_t state_cells = 0;
  std::uint64_t train_cells = 0;
  std::uint64_t eval_cells = 0;
  std::uint64_t update_cells = 0;
  std::uint64_t train_queries = 0;
  std::uint64_t eval_queries = 0;
};

/// The recommender's end of a session; the middle-matrix holder of the
/// sandwich. Owns the key pair in real-HE mode.
class RecommenderLink {
 public:
  RecommenderLink(std::unique_ptr<Transport> transport, ProtocolConfig cfg,
                  std::uint64_t enc_seed);

  /// Hello (+ key generation and PubKey in real-HE mode).
  void open(int key_bits = 512);
  /// Reuse an existing key pair instead of generating one.
  void open_with_keys(std::shared_ptr<const KeyPair> keys);

  /// Pushes the current user-feature middle matrix (callers pass it already
  /// row-clipped when the DP contract requires it).
  void push_state(const DenseMatrix& x);

  /// (B L) X W2 (+ noise on train queries when dp is on).
  DenseMatrix forward(std::span<const std::size_t> users, QueryPurpose purpose);

  /// (B L B^T) mid W2^T (+ noise); in stored mode the server also folds the
  /// result into the stored state rows.
  DenseMatrix backward(std::span<const std::size_t> users, const DenseMatrix& mid);

  /// Client-pushed stored-state update: state[rows] -= eta * delta.
  void push_update(std::span<const std::size_t> rows, double eta,
                   const DenseMatrix& delta);

  AccountantExport bye();

  const CommTally& tally() const { return tally_; }
  const TransportCounters& transport_counters() const { return transport_->counters(); }
  const ProtocolConfig& config() const { return cfg_; }
  const KeyPair* keys() const { return keys_.get(); }

 private:
  Frame roundtrip(const Frame& f);
  DenseMatrix read_result_matrix(ByteReader& r);

  std::unique_ptr<Transport> transport_;
  ProtocolConfig cfg_;
  std::uint64_t enc_seed_;
  RngState enc_rng_;
  std::shared_ptr<const KeyPair> keys_;
  CommTally tally_;
  bool open_ = false;
};

void write_protocol_config(ByteWriter& w, const ProtocolConfig& cfg);
ProtocolConfig read_protocol_config(ByteReader& r);

/// Encrypts a plain matrix with entries interpreted at an explicit scale so
/// it can be homomorphically added to product results.
CipherMatrix enc_matrix_at_scale(const PublicKey& pk, const DenseMatrix& m,
                                 int scale_exp, RngState& rng);

}  // namespace p4gcn
