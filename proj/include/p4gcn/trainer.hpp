// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <string>

#include "p4gcn/dataio.hpp"
#include "p4gcn/model.hpp"
#include "p4gcn/protocol.hpp"

namespace p4gcn {

struct TrainConfig {
  std::string dataset = "synthetic";
  std::string data_dir = "data/synthetic";

  std::size_t d = 64;
  double learning_rate = 1.0;
  std::size_t batch_size = 0;  // 0 = full batch
  std::size_t epochs = 10;
  double clip_c = 0.1;
  double beta = 1.0;
  double init_scale = 0.1;
  double test_fraction = 0.2;

  bool social = true;
  bool fusion = true;
  bool scale_laplacian = true;  // scale Ltilde (and the bounds) by 1/N

  bool dp = false;
  double epsilon = 15.0;
  double delta = 1.0e-4;

  CipherMode cipher = CipherMode::Plaintext;
  bool stored_state = false;
  int key_bits = 512;
  int frac_bits = 40;
  double codec_window = 1.0e6;

  std::uint64_t seed = 1;

  // 0 means "use the dataset definition's range".
  double r_min = 0.0;
  double r_max = 0.0;

  std::string transport = "memory";  // memory | socket
  std::string connect_host = "127.0.0.1";
  int connect_port = 0;

  bool emit_timing = false;
  std::string report_path;
  std::string checkpoint_path;

  ModelConfig model_config(double rmin, double rmax) const;
  ProtocolConfig protocol_config(std::uint64_t queries_planned) const;
};

struct EpochRecord {
  double train_loss = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
};

struct CommLedger {
  CommTally tally;
  TransportCounters transport;
  std::uint64_t iterations = 0;
  std::uint64_t sum_batch_users = 0;
  /// N d + sum_t |B_t| 3d: holds exactly in stored-state mode, where the
  /// feature ciphertext travels once and each iteration moves Y_B, the
  /// backward middle and the feature gradient.
  std::uint64_t closed_form_train_cells = 0;
  bool closed_form_applies = false;
  bool closed_form_matches = false;
};

struct RunReport {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<EpochRecord> epochs;
  EvalMetrics final_metrics;
  EvalMetrics best_metrics;
  std::size_t best_epoch = 0;  // 1-based
  AccountantExport accountant;
  CommLedger ledger;
  double wall_seconds = 0.0;
  std::string kernel;
};

/// Serialized without wall time unless emit_timing, so identical runs write
/// byte-identical reports.
std::string report_to_json(const RunReport& report, const TrainConfig& cfg);

RunReport train(const TrainConfig& cfg);
RunReport train_on_bundle(const TrainConfig& cfg, const DatasetBundle& bundle,
                          RecommenderState* best_state_out = nullptr);

void save_checkpoint(const std::string& path, const RecommenderState& state,
                     const TrainConfig& cfg, double rmin, double rmax);
RecommenderState load_checkpoint(const std::string& path, TrainConfig& cfg_out,
                                 double& rmin_out, double& rmax_out);

/// Reconstructs the social party for a dataset + config (same seed derivation
/// the trainer uses) and evaluates a state against the test split.
EvalMetrics evaluate_checkpoint(const std::string& path, const std::string& data_dir);

/// Runs the social party server over one accepted TCP connection.
void run_party_server(const TrainConfig& cfg, int port, int* bound_port = nullptr,
                      std::function<void()> ready = {});

}  // namespace p4gcn
