// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include "p4gcn/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace p4gcn {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

RecommenderState RecommenderState::init(std::size_t n_users, std::size_t n_items,
                                        const ModelConfig& cfg, RngState& rng) {
  RecommenderState s;
  const std::size_t d = cfg.d;
  auto fill = [&](DenseMatrix& m, std::size_t r, std::size_t c) {
    m = DenseMatrix(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = cfg.init_scale * rng.normal();
  };
  fill(s.x_user0, n_users, d);
  fill(s.x_item0, n_items, d);
  fill(s.w_p1, d, d);
  s.bias.assign(d, 0.0);
  fill(s.w_f1, 2 * d, 2 * d);
  fill(s.w_f2, 2 * d, 2 * d);
  return s;
}

RatingGraph RatingGraph::build(std::size_t n_users, std::size_t n_items,
                               std::span<const RatingTriple> train) {
  RatingGraph g;
  g.n_users = n_users;
  g.n_items = n_items;
  g.user_deg.assign(n_users, 0);
  g.item_deg.assign(n_items, 0);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(train.size());
  for (const auto& r : train) {
    if (r.user >= n_users || r.item >= n_items) {
      throw std::out_of_range("RatingGraph: record index out of range");
    }
    pairs.emplace_back(r.user, r.item);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  for (const auto& [u, v] : pairs) {
    ++g.user_deg[u];
    ++g.item_deg[v];
  }
  g.by_user.assign(n_users, {});
  g.by_item.assign(n_items, {});
  for (const auto& [u, v] : pairs) {
    const double w = 1.0 / std::sqrt(static_cast<double>(g.user_deg[u]) *
                                     static_cast<double>(g.item_deg[v]));
    g.by_user[u].emplace_back(v, w);
    g.by_item[v].emplace_back(u, w);
  }
  return g;
}

Batch Batch::from_records(std::vector<RatingTriple> records) {
  Batch b;
  b.records = std::move(records);
  if (b.records.empty()) throw std::invalid_argument("Batch: empty record set");
  b.users.reserve(b.records.size());
  for (const auto& r : b.records) b.users.push_back(r.user);
  std::sort(b.users.begin(), b.users.end());
  b.users.erase(std::unique(b.users.begin(), b.users.end()), b.users.end());
  b.user_slot.reserve(b.records.size());
  for (const auto& r : b.records) {
    const auto it = std::lower_bound(b.users.begin(), b.users.end(), r.user);
    b.user_slot.push_back(static_cast<std::size_t>(it - b.users.begin()));
  }
  return b;
}

void backbone_forward(const RecommenderState& state, const RatingGraph& rg,
                      DenseMatrix& x_user1, DenseMatrix& x_item1) {
  const std::size_t d = state.x_user0.cols();
  x_user1 = DenseMatrix(rg.n_users, d);
  for (std::size_t u = 0; u < rg.n_users; ++u) {
    auto out = x_user1.row(u);
    auto self = state.x_user0.row(u);
    if (rg.user_deg[u] == 0) {
      // No interactions: the propagated layer falls back to the node itself.
      for (std::size_t c = 0; c < d; ++c) out[c] = self[c];
      continue;
    }
    for (const auto& [v, w] : rg.by_user[u]) {
      auto item = state.x_item0.row(v);
      for (std::size_t c = 0; c < d; ++c) out[c] += w * item[c];
    }
    for (std::size_t c = 0; c < d; ++c) out[c] = 0.5 * (self[c] + out[c]);
  }
  x_item1 = DenseMatrix(rg.n_items, d);
  for (std::size_t v = 0; v < rg.n_items; ++v) {
    auto out = x_item1.row(v);
    auto self = state.x_item0.row(v);
    if (rg.item_deg[v] == 0) {
      for (std::size_t c = 0; c < d; ++c) out[c] = self[c];
      continue;
    }
    for (const auto& [u, w] : rg.by_item[v]) {
      auto user = state.x_user0.row(u);
      for (std::size_t c = 0; c < d; ++c) out[c] += w * user[c];
    }
    for (std::size_t c = 0; c < d; ++c) out[c] = 0.5 * (self[c] + out[c]);
  }
}

double decode_rating(double inner, double r_min, double r_max) {
  return (r_max - r_min) * sigmoid(inner) + r_min;
}

double mse_loss(std::span<const double> preds, std::span<const double> targets) {
  if (preds.empty() || preds.size() != targets.size()) {
    throw std::invalid_argument("mse_loss: empty or mismatched inputs");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    acc += d * d;
  }
  return acc / static_cast<double>(preds.size());
}

ForwardTrace model_forward(const RecommenderState& state, const RatingGraph& rg,
                           const Batch& batch, RecommenderLink& link,
                           const ModelConfig& cfg, QueryPurpose purpose) {
  const std::size_t d = cfg.d;
  ForwardTrace t;
  backbone_forward(state, rg, t.x_user1, t.x_item1);

  const std::size_t nb = batch.users.size();
  if (cfg.social) {
    if (cfg.resend_state) {
      link.push_state(clip_rows(state.x_user0, cfg.clip_c));
    }
    t.y = link.forward(batch.users, purpose);
    if (t.y.rows() != nb || t.y.cols() != d) {
      throw ProtocolError("model_forward: unexpected social response shape");
    }
    t.p_pre = matmul(t.y, state.w_p1);
    for (std::size_t i = 0; i < nb; ++i) {
      auto row = t.p_pre.row(i);
      for (std::size_t c = 0; c < d; ++c) row[c] += state.bias[c];
    }
    t.x2 = relu(t.p_pre);
  } else {
    t.y = DenseMatrix(nb, d);
    t.p_pre = DenseMatrix(nb, d);
    t.x2 = DenseMatrix(nb, d);
  }

  t.x1b = select_rows(t.x_user1, batch.users);
  t.x2s = cfg.beta * t.x2;
  if (cfg.fusion) {
    t.vcat = hconcat(t.x1b, t.x2s);
    t.h_pre = matmul(t.vcat, state.w_f1);
    t.h = relu(t.h_pre);
    DenseMatrix logits = matmul(t.h, state.w_f2);
    t.gates = DenseMatrix(nb, d);
    t.x3 = DenseMatrix(nb, d);
    for (std::size_t i = 0; i < nb; ++i) {
      for (std::size_t c = 0; c < d; ++c) {
        const double w = sigmoid(logits(i, c) - logits(i, d + c));
        t.gates(i, c) = w;
        t.x3(i, c) = w * t.x1b(i, c) + (1.0 - w) * t.x2s(i, c);
      }
    }
  } else {
    // Ablation: plain average of the local and (scaled) social embeddings.
    t.x3 = DenseMatrix(nb, d);
    for (std::size_t i = 0; i < nb; ++i) {
      for (std::size_t c = 0; c < d; ++c) {
        t.x3(i, c) = 0.5 * (t.x1b(i, c) + t.x2s(i, c));
      }
    }
  }

  const std::size_t k = batch.records.size();
  t.inner.resize(k);
  t.sig.resize(k);
  t.pred.resize(k);
  std::vector<double> targets(k);
  for (std::size_t r = 0; r < k; ++r) {
    const auto& rec = batch.records[r];
    auto xu = t.x3.row(batch.user_slot[r]);
    auto xv = t.x_item1.row(rec.item);
    double ip = 0.0;
    for (std::size_t c = 0; c < d; ++c) ip += xu[c] * xv[c];
    t.inner[r] = ip;
    t.sig[r] = sigmoid(ip);
    t.pred[r] = (cfg.r_max - cfg.r_min) * t.sig[r] + cfg.r_min;
    targets[r] = rec.rating;
  }
  t.loss = mse_loss(t.pred, targets);
  return t;
}

Gradients model_backward(const RecommenderState& state, const RatingGraph& rg,
                         const Batch& batch, const ForwardTrace& t,
                         RecommenderLink& link, const ModelConfig& cfg,
                         double learning_rate) {
  const std::size_t d = cfg.d;
  const std::size_t nb = batch.users.size();
  const std::size_t k = batch.records.size();
  const double rho = cfg.r_max - cfg.r_min;

  Gradients g;
  g.users = batch.users;

  // Decoder and loss.
  DenseMatrix g_x3(nb, d);
  DenseMatrix g_xi1(rg.n_items, d);
  for (std::size_t r = 0; r < k; ++r) {
    const auto& rec = batch.records[r];
    const std::size_t slot = batch.user_slot[r];
    const double gp = (2.0 / static_cast<double>(k)) * (t.pred[r] - rec.rating) * rho *
                      t.sig[r] * (1.0 - t.sig[r]);
    auto xv = t.x_item1.row(rec.item);
    auto xu = t.x3.row(slot);
    auto gx3 = g_x3.row(slot);
    auto gxv = g_xi1.row(rec.item);
    for (std::size_t c = 0; c < d; ++c) {
      gx3[c] += gp * xv[c];
      gxv[c] += gp * xu[c];
    }
  }

  // Fusion.
  DenseMatrix g_x1b(nb, d);
  DenseMatrix g_x2s(nb, d);
  if (cfg.fusion) {
    DenseMatrix g_logits(nb, 2 * d);
    for (std::size_t i = 0; i < nb; ++i) {
      for (std::size_t c = 0; c < d; ++c) {
        const double w = t.gates(i, c);
        const double go = g_x3(i, c);
        g_x1b(i, c) = go * w;
        g_x2s(i, c) = go * (1.0 - w);
        const double gw = go * (t.x1b(i, c) - t.x2s(i, c));
        const double gl = gw * w * (1.0 - w);
        g_logits(i, c) = gl;
        g_logits(i, d + c) = -gl;
      }
    }
    g.w_f2 = matmul(t.h.transposed(), g_logits);
    DenseMatrix g_h = matmul(g_logits, state.w_f2.transposed());
    DenseMatrix g_hpre = relu_backward(g_h, t.h_pre);
    g.w_f1 = matmul(t.vcat.transposed(), g_hpre);
    DenseMatrix g_v = matmul(g_hpre, state.w_f1.transposed());
    for (std::size_t i = 0; i < nb; ++i) {
      for (std::size_t c = 0; c < d; ++c) {
        g_x1b(i, c) += g_v(i, c);
        g_x2s(i, c) += g_v(i, d + c);
      }
    }
  } else {
    g.w_f1 = DenseMatrix(2 * d, 2 * d);
    g.w_f2 = DenseMatrix(2 * d, 2 * d);
    for (std::size_t i = 0; i < nb; ++i) {
      for (std::size_t c = 0; c < d; ++c) {
        g_x1b(i, c) = 0.5 * g_x3(i, c);
        g_x2s(i, c) = 0.5 * g_x3(i, c);
      }
    }
  }

  // Social branch.
  g.social_update = DenseMatrix(nb, d);
  if (cfg.social) {
    DenseMatrix g_x2 = cfg.beta * g_x2s;
    DenseMatrix g_p = relu_backward(g_x2, t.p_pre);
    g.w_p1 = matmul(t.y.transposed(), g_p);
    g.bias.assign(d, 0.0);
    for (std::size_t i = 0; i < nb; ++i) {
      for (std::size_t c = 0; c < d; ++c) g.bias[c] += g_p(i, c);
    }
    DenseMatrix g_y = matmul(g_p, state.w_p1.transposed());
    // Middle matrix of the feature-backward sandwich: learning rate folded
    // in, rows clipped to C to keep the per-user sensitivity bound.
    const DenseMatrix mid = clip_rows(learning_rate * g_y, cfg.clip_c);
    g.social_update = link.backward(batch.users, mid);
  } else {
    g.w_p1 = DenseMatrix(d, d);
    g.bias.assign(d, 0.0);
  }

  // Backbone branch into the embeddings.
  g.x_user0 = DenseMatrix(rg.n_users, d);
  g.x_item0 = DenseMatrix(rg.n_items, d);
  for (std::size_t i = 0; i < nb; ++i) {
    const std::size_t u = batch.users[i];
    auto gu0 = g.x_user0.row(u);
    auto g1 = g_x1b.row(i);
    if (rg.user_deg[u] == 0) {
      for (std::size_t c = 0; c < d; ++c) gu0[c] += g1[c];
    } else {
      for (std::size_t c = 0; c < d; ++c) gu0[c] += 0.5 * g1[c];
      for (const auto& [v, w] : rg.by_user[u]) {
        auto gi0 = g.x_item0.row(v);
        for (std::size_t c = 0; c < d; ++c) gi0[c] += 0.5 * w * g1[c];
      }
    }
  }
  for (std::size_t v = 0; v < rg.n_items; ++v) {
    auto g1 = g_xi1.row(v);
    bool any = false;
    for (std::size_t c = 0; c < d; ++c) {
      if (g1[c] != 0.0) {
        any = true;
        break;
      }
    }
    if (!any) continue;
    auto gi0 = g.x_item0.row(v);
    if (rg.item_deg[v] == 0) {
      for (std::size_t c = 0; c < d; ++c) gi0[c] += g1[c];
    } else {
      for (std::size_t c = 0; c < d; ++c) gi0[c] += 0.5 * g1[c];
      for (const auto& [u, w] : rg.by_item[v]) {
        auto gu0 = g.x_user0.row(u);
        for (std::size_t c = 0; c < d; ++c) gu0[c] += 0.5 * w * g1[c];
      }
    }
  }
  return g;
}

void sgd_step(RecommenderState& state, const Gradients& g, double learning_rate) {
  auto apply = [&](DenseMatrix& param, const DenseMatrix& grad) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      param.data()[i] -= learning_rate * grad.data()[i];
    }
  };
  apply(state.x_user0, g.x_user0);
  apply(state.x_item0, g.x_item0);
  apply(state.w_p1, g.w_p1);
  for (std::size_t c = 0; c < state.bias.size(); ++c) {
    state.bias[c] -= learning_rate * g.bias[c];
  }
  apply(state.w_f1, g.w_f1);
  apply(state.w_f2, g.w_f2);
  // Social-branch update arrives pre-scaled (learning rate folded into the
  // protocol query) and noised; subtract as-is on the batch rows.
  for (std::size_t i = 0; i < g.users.size(); ++i) {
    auto row = state.x_user0.row(g.users[i]);
    auto upd = g.social_update.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] -= upd[c];
  }
}

EvalMetrics evaluate(const RecommenderState& state, const RatingGraph& rg,
                     std::span<const RatingTriple> records, RecommenderLink& link,
                     const ModelConfig& cfg) {
  if (records.empty()) throw std::invalid_argument("evaluate: empty record set");
  Batch b = Batch::from_records({records.begin(), records.end()});
  const ForwardTrace t =
      model_forward(state, rg, b, link, cfg, QueryPurpose::Eval);
  EvalMetrics m;
  double se = 0.0, ae = 0.0;
  for (std::size_t r = 0; r < b.records.size(); ++r) {
    const double res = t.pred[r] - b.records[r].rating;
    se += res * res;
    ae += std::fabs(res);
  }
  const double k = static_cast<double>(b.records.size());
  m.rmse = std::sqrt(se / k);
  m.mae = ae / k;
  return m;
}

}  // namespace p4gcn
