// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include "p4gcn/social_graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace p4gcn {

bool SocialGraph::add_edge(std::size_t i, std::size_t j) {
  if (i >= n_ || j >= n_) throw std::out_of_range("SocialGraph: user index out of range");
  if (i == j) return false;
  auto e = std::minmax(i, j);
  if (!edges_.emplace(e.first, e.second).second) return false;
  ++degree_[i];
  ++degree_[j];
  finalized_ = false;
  return true;
}

bool SocialGraph::has_edge(std::size_t i, std::size_t j) const {
  if (i == j) return false;
  auto e = std::minmax(i, j);
  return edges_.count({e.first, e.second}) > 0;
}

void SocialGraph::finalize() {
  adj_offset_.assign(n_ + 1, 0);
  for (const auto& [a, b] : edges_) {
    ++adj_offset_[a + 1];
    ++adj_offset_[b + 1];
  }
  for (std::size_t i = 0; i < n_; ++i) adj_offset_[i + 1] += adj_offset_[i];
  adj_flat_.assign(adj_offset_[n_], 0);
  std::vector<std::size_t> cursor(adj_offset_.begin(), adj_offset_.end() - 1);
  for (const auto& [a, b] : edges_) {
    adj_flat_[cursor[a]++] = b;
    adj_flat_[cursor[b]++] = a;
  }
  for (std::size_t i = 0; i < n_; ++i) {
    std::sort(adj_flat_.begin() + adj_offset_[i], adj_flat_.begin() + adj_offset_[i + 1]);
  }
  finalized_ = true;
}

std::span<const std::size_t> SocialGraph::neighbors(std::size_t i) const {
  if (!finalized_) throw std::logic_error("SocialGraph: finalize() before neighbors()");
  return {adj_flat_.data() + adj_offset_[i], adj_offset_[i + 1] - adj_offset_[i]};
}

NormalizedLaplacian normalized_laplacian(const SocialGraph& g, bool scale_by_inverse_n) {
  const std::size_t n = g.n_users();
  DenseMatrix lap(n, n);
  std::vector<double> dinv(n);
  for (std::size_t i = 0; i < n; ++i) {
    dinv[i] = 1.0 / std::sqrt(1.0 + static_cast<double>(g.degree(i)));
  }
  const double scale = scale_by_inverse_n ? 1.0 / static_cast<double>(n) : 1.0;
  for (std::size_t i = 0; i < n; ++i) lap(i, i) = dinv[i] * dinv[i] * scale;
  for (const auto& [a, b] : g.edges()) {
    const double v = dinv[a] * dinv[b] * scale;
    lap(a, b) = v;
    lap(b, a) = v;
  }
  return NormalizedLaplacian{std::move(lap), scale_by_inverse_n};
}

BatchSelector::BatchSelector(std::vector<std::size_t> indices, std::size_t n_users)
    : indices_(std::move(indices)) {
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] >= n_users) {
      throw std::out_of_range("BatchSelector: index out of range");
    }
    if (i > 0 && indices_[i] <= indices_[i - 1]) {
      throw std::invalid_argument("BatchSelector: indices must be strictly increasing");
    }
  }
}

DenseMatrix batch_rows(const NormalizedLaplacian& lap, const BatchSelector& sel) {
  return select_rows(lap.matrix, sel.indices());
}

DenseMatrix batch_block(const NormalizedLaplacian& lap, const BatchSelector& sel) {
  const auto idx = sel.indices();
  DenseMatrix out(idx.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = 0; j < idx.size(); ++j) {
      out(i, j) = lap.matrix(idx[i], idx[j]);
    }
  }
  return out;
}

}  // namespace p4gcn
