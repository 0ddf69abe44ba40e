// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "p4gcn/matrix.hpp"
#include "p4gcn/rng.hpp"
#include "p4gcn/social_graph.hpp"

namespace p4gcn {

/// s_l(i): structural factor bounding how much one flipped social relation
/// can move user i's aggregated row, with
///   c_i = sum_j (a_ij + [i==j]) / (deg_j + 1),  c_o = max_j 1 / (deg_j + 1):
///   s_l(i) = sqrt(1/2 + c_o/2)                          if deg_i = 0
///          = sqrt(c_i / (deg_i^2 + deg_i) + c_o / deg_i) otherwise.
/// Always <= 2.
double structural_sensitivity_factor(const SocialGraph& g, std::size_t user);

/// C^2 * s_l(user): the L2-sensitivity bound of the per-user aggregation when
/// feature rows are clipped to C and the weight matrix is Frobenius-clipped
/// to C.
double social_sensitivity(const SocialGraph& g, std::size_t user, double clip_c);

/// Per-user sensitivity bounds, with the optional 1/N factor applied when the
/// Laplacian itself is scaled by 1/N (the bound is linear in the row).
struct SensitivityProfile {
  double clip_c = 0.0;
  bool laplacian_scaled = false;
  std::vector<double> factor;        // s_l(i)
  std::vector<double> scaled_bound_; // C^2 s_l(i) (/N when scaled)

  static SensitivityProfile build(const SocialGraph& g, double clip_c,
                                  bool laplacian_scaled);
  double scaled_bound(std::size_t user) const { return scaled_bound_[user]; }
  std::size_t n_users() const { return factor.size(); }
};

/// Largest b such that a Gaussian mechanism with sigma = sensitivity / b is
/// (epsilon, delta)-DP, from the analytic condition
///   Phi(b/2 - eps/b) - e^eps Phi(-b/2 - eps/b) <= delta,
/// solved by bisection to 1e-9.
double calibrate_b(double epsilon, double delta);

/// delta(eps) of a Gaussian privacy-loss variable N(eta, 2*eta).
double delta_for_privacy_loss(double eta, double epsilon);

/// Inverse of delta_for_privacy_loss in epsilon (bisection to 1e-9).
double epsilon_for_privacy_loss(double eta, double delta);

/// Privacy budget split evenly across all planned queries: each query runs at
/// b_query = b_total / sqrt(planned_queries), so the composed loss
/// planned_queries * b_query^2 / 2 equals the budgeted b_total^2 / 2.
struct DpBudget {
  double epsilon = 0.0;
  double delta = 0.0;
  std::uint64_t queries_planned = 0;
  double b_total = 0.0;
  double b_query = 0.0;

  static DpBudget calibrate(double epsilon, double delta, std::uint64_t queries_planned);
};

/// mean + U G V^T with G i.i.d. standard normal: exact sampler for the
/// matrix Gaussian MN(mean, U U^T, V V^T).
DenseMatrix sample_matrix_gaussian(const DenseMatrix& mean, const DenseMatrix& u,
                                   const DenseMatrix& v, RngState& rng);

/// Row i of a query on `users` gets sigma_i = profile.scaled_bound(users[i]) / b;
/// realized as U = diag(sigma), V = I.
struct NoisePlan {
  std::vector<double> row_sigma;
  std::size_t dim = 0;

  static NoisePlan make(const SensitivityProfile& profile, double b_query,
                        std::span<const std::size_t> users, std::size_t dim);
  DenseMatrix sample(RngState& rng) const;
};

/// Per-user accumulated privacy-loss mean. Each query charges the worst-case
/// eta = (sensitivity / sigma)^2 / 2 of its touched users; the total cost is
/// the maximum over users (parallel composition).
class Accountant {
 public:
  explicit Accountant(std::size_t n_users) : eta_(n_users, 0.0) {}

  void record(std::size_t user, double sensitivity, double sigma);
  double eta(std::size_t user) const { return eta_[user]; }
  double max_eta() const;
  /// epsilon at the given delta for the worst user; 0 when nothing recorded.
  double epsilon(double delta) const;
  std::uint64_t queries() const { return queries_; }
  void bump_query_counter() { ++queries_; }
  const std::vector<double>& per_user_eta() const { return eta_; }

 private:
  std::vector<double> eta_;
  std::uint64_t queries_ = 0;
};

}  // namespace p4gcn
