// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include "p4gcn/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace p4gcn {

namespace {

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Condition value of the analytic Gaussian mechanism at ratio b = Delta/sigma.
double analytic_delta(double b, double epsilon) {
  return std_normal_cdf(b / 2.0 - epsilon / b) -
         std::exp(epsilon) * std_normal_cdf(-b / 2.0 - epsilon / b);
}

}  // namespace

double structural_sensitivity_factor(const SocialGraph& g, std::size_t user) {
  const std::size_t n = g.n_users();
  if (user >= n) throw std::out_of_range("structural_sensitivity_factor: bad user");
  double c_o = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    c_o = std::max(c_o, 1.0 / (1.0 + static_cast<double>(g.degree(j))));
  }
  const double deg = static_cast<double>(g.degree(user));
  if (deg == 0.0) {
    return std::sqrt(0.5 + 0.5 * c_o);
  }
  double c_i = 1.0 / (deg + 1.0);  // j == user term: (a_ii + 1) / (deg_i + 1)
  for (std::size_t j : g.neighbors(user)) {
    c_i += 1.0 / (1.0 + static_cast<double>(g.degree(j)));
  }
  return std::sqrt(c_i / (deg * deg + deg) + c_o / deg);
}

double social_sensitivity(const SocialGraph& g, std::size_t user, double clip_c) {
  if (clip_c <= 0.0) throw std::invalid_argument("social_sensitivity: C must be positive");
  return clip_c * clip_c * structural_sensitivity_factor(g, user);
}

SensitivityProfile SensitivityProfile::build(const SocialGraph& g, double clip_c,
                                             bool laplacian_scaled) {
  SensitivityProfile p;
  p.clip_c = clip_c;
  p.laplacian_scaled = laplacian_scaled;
  const std::size_t n = g.n_users();
  p.factor.resize(n);
  p.scaled_bound_.resize(n);
  const double scale = laplacian_scaled ? 1.0 / static_cast<double>(n) : 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    p.factor[i] = structural_sensitivity_factor(g, i);
    p.scaled_bound_[i] = clip_c * clip_c * p.factor[i] * scale;
  }
  return p;
}

double calibrate_b(double epsilon, double delta) {
  if (epsilon <= 0.0 || delta <= 0.0 || delta >= 1.0) {
    throw std::invalid_argument("calibrate_b: need epsilon > 0 and delta in (0,1)");
  }
  double lo = 1e-12;
  double hi = 1.0;
  int guard = 0;
  while (analytic_delta(hi, epsilon) <= delta) {
    hi *= 2.0;
    if (++guard > 200) throw std::runtime_error("calibrate_b: no bracket found");
  }
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    if (analytic_delta(mid, epsilon) <= delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double delta_for_privacy_loss(double eta, double epsilon) {
  if (eta <= 0.0) return 0.0;
  const double s = std::sqrt(2.0 * eta);
  return std_normal_cdf((eta - epsilon) / s) -
         std::exp(epsilon) * std_normal_cdf(-(eta + epsilon) / s);
}

double epsilon_for_privacy_loss(double eta, double delta) {
  if (eta <= 0.0) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  int guard = 0;
  while (delta_for_privacy_loss(eta, hi) > delta) {
    hi *= 2.0;
    if (++guard > 200) throw std::runtime_error("epsilon_for_privacy_loss: no bracket");
  }
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    if (delta_for_privacy_loss(eta, mid) > delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

DpBudget DpBudget::calibrate(double epsilon, double delta, std::uint64_t queries_planned) {
  if (queries_planned == 0) {
    throw std::invalid_argument("DpBudget: queries_planned must be positive");
  }
  DpBudget b;
  b.epsilon = epsilon;
  b.delta = delta;
  b.queries_planned = queries_planned;
  b.b_total = calibrate_b(epsilon, delta);
  b.b_query = b.b_total / std::sqrt(static_cast<double>(queries_planned));
  return b;
}

DenseMatrix sample_matrix_gaussian(const DenseMatrix& mean, const DenseMatrix& u,
                                   const DenseMatrix& v, RngState& rng) {
  if (u.rows() != u.cols() || v.rows() != v.cols()) {
    throw std::invalid_argument("sample_matrix_gaussian: U and V must be square");
  }
  if (u.rows() != mean.rows() || v.rows() != mean.cols()) {
    throw std::invalid_argument("sample_matrix_gaussian: shape mismatch");
  }
  DenseMatrix g(mean.rows(), mean.cols());
  for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
  return mean + matmul(matmul(u, g), v.transposed());
}

NoisePlan NoisePlan::make(const SensitivityProfile& profile, double b_query,
                          std::span<const std::size_t> users, std::size_t dim) {
  if (b_query <= 0.0) throw std::invalid_argument("NoisePlan: b must be positive");
  NoisePlan plan;
  plan.dim = dim;
  plan.row_sigma.reserve(users.size());
  for (std::size_t u : users) {
    plan.row_sigma.push_back(profile.scaled_bound(u) / b_query);
  }
  return plan;
}

DenseMatrix NoisePlan::sample(RngState& rng) const {
  DenseMatrix z(row_sigma.size(), dim);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const double s = row_sigma[i];
    for (double& v : z.row(i)) v = s * rng.normal();
  }
  return z;
}

void Accountant::record(std::size_t user, double sensitivity, double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("Accountant: sigma must be positive");
  const double b = sensitivity / sigma;
  eta_[user] += 0.5 * b * b;
}

double Accountant::max_eta() const {
  double m = 0.0;
  for (double e : eta_) m = std::max(m, e);
  return m;
}

double Accountant::epsilon(double delta) const {
  return epsilon_for_privacy_loss(max_eta(), delta);
}

}  // namespace p4gcn
