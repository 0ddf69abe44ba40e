// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "p4gcn/dataio.hpp"
#include "p4gcn/matrix.hpp"
#include "p4gcn/protocol.hpp"
#include "p4gcn/rng.hpp"

namespace p4gcn {

struct ModelConfig {
  std::size_t d = 64;
  double clip_c = 0.1;
  double beta = 1.0;
  double r_min = 1.0;
  double r_max = 5.0;
  bool fusion = true;
  bool social = true;
  double init_scale = 0.1;
  /// Resend the clipped feature matrix before every forward query; when
  /// false the server works from its stored state.
  bool resend_state = true;
};

/// Everything the recommender trains. The social party's frozen factor W_P2
/// lives on the other side of the protocol and never appears here.
struct RecommenderState {
  DenseMatrix x_user0;  // N x d
  DenseMatrix x_item0;  // M x d
  DenseMatrix w_p1;     // d x d
  std::vector<double> bias;  // d
  DenseMatrix w_f1;     // 2d x 2d
  DenseMatrix w_f2;     // 2d x 2d

  static RecommenderState init(std::size_t n_users, std::size_t n_items,
                               const ModelConfig& cfg, RngState& rng);
};

/// Symmetric-normalized bipartite propagation operators built from the train
/// ratings (binary interactions; weights 1/sqrt(deg_u deg_v)).
struct RatingGraph {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::vector<std::vector<std::pair<std::size_t, double>>> by_user;  // user -> (item, w)
  std::vector<std::vector<std::pair<std::size_t, double>>> by_item;  // item -> (user, w)
  std::vector<std::size_t> user_deg;
  std::vector<std::size_t> item_deg;

  static RatingGraph build(std::size_t n_users, std::size_t n_items,
                           std::span<const RatingTriple> train);
};

struct Batch {
  std::vector<RatingTriple> records;
  std::vector<std::size_t> users;      // sorted unique users of the records
  std::vector<std::size_t> user_slot;  // per record: row in `users`

  static Batch from_records(std::vector<RatingTriple> records);
};

struct ForwardTrace {
  // Backbone outputs (full matrices; one propagation layer averaged with the
  // input features, degree-0 rows falling back to their own features).
  DenseMatrix x_user1;
  DenseMatrix x_item1;
  // Social branch, batch rows only.
  DenseMatrix y;        // (B Ltilde) X W_P2 (+ noise)
  DenseMatrix p_pre;    // y W_P1 + 1 b^T
  DenseMatrix x2;       // relu(p_pre)
  // Fusion, batch rows only.
  DenseMatrix x1b;      // batch rows of x_user1
  DenseMatrix x2s;      // beta * x2
  DenseMatrix vcat;     // [x1b | x2s]
  DenseMatrix h_pre;    // vcat W_f1
  DenseMatrix h;        // relu(h_pre)
  DenseMatrix gates;    // B x d softmax pair weights on the x1 side
  DenseMatrix x3;       // fused embedding rows
  // Decoder, per record.
  std::vector<double> inner;
  std::vector<double> sig;
  std::vector<double> pred;
  double loss = 0.0;
};

/// (x_user1, x_item1) of the light propagation backbone.
void backbone_forward(const RecommenderState& state, const RatingGraph& rg,
                      DenseMatrix& x_user1, DenseMatrix& x_item1);

ForwardTrace model_forward(const RecommenderState& state, const RatingGraph& rg,
                           const Batch& batch, RecommenderLink& link,
                           const ModelConfig& cfg, QueryPurpose purpose);

double mse_loss(std::span<const double> preds, std::span<const double> targets);

double decode_rating(double inner, double r_min, double r_max);

struct Gradients {
  DenseMatrix w_p1;
  std::vector<double> bias;
  DenseMatrix w_f1;
  DenseMatrix w_f2;
  DenseMatrix x_user0;  // backbone branch only, full size
  DenseMatrix x_item0;  // full size
  /// Social-branch update for batch user rows, already scaled by the
  /// learning rate inside the protocol query (and carrying its DP noise):
  /// apply as x_user0[users[i]] -= social_update[i].
  DenseMatrix social_update;
  std::vector<std::size_t> users;
};

/// Closed-form gradients; the social feature gradient goes through a second
/// sandwich query with middle rows clip_rows(lr * dL/dY, C).
Gradients model_backward(const RecommenderState& state, const RatingGraph& rg,
                         const Batch& batch, const ForwardTrace& trace,
                         RecommenderLink& link, const ModelConfig& cfg,
                         double learning_rate);

/// theta -= lr * grad for the ordinary parameters, then the pre-scaled
/// social update on the batch rows.
void sgd_step(RecommenderState& state, const Gradients& g, double learning_rate);

struct EvalMetrics {
  double rmse = 0.0;
  double mae = 0.0;
};

/// RMSE/MAE over a rating list; the social branch runs as a noise-free eval
/// query.
EvalMetrics evaluate(const RecommenderState& state, const RatingGraph& rg,
                     std::span<const RatingTriple> records, RecommenderLink& link,
                     const ModelConfig& cfg);

}  // namespace p4gcn
