// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "p4gcn/matrix.hpp"

namespace p4gcn {

/// Undirected user-user adjacency, a_ij in {0,1}, no stored self-loops (the
/// normalized operator adds the identity analytically).
class SocialGraph {
 public:
  explicit SocialGraph(std::size_t n_users) : n_(n_users), degree_(n_users, 0) {}

  std::size_t n_users() const { return n_; }

  /// Adds the undirected relation {i, j}. Self-loops and duplicates are
  /// ignored; returns whether the edge was new.
  bool add_edge(std::size_t i, std::size_t j);

  bool has_edge(std::size_t i, std::size_t j) const;
  std::size_t degree(std::size_t i) const { return degree_[i]; }
  std::size_t n_edges() const { return edges_.size(); }
  const std::set<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
  std::span<const std::size_t> neighbors(std::size_t i) const;

  /// Called once after all edges are added; builds adjacency lists.
  void finalize();
  bool finalized() const { return finalized_; }

 private:
  std::size_t n_;
  std::set<std::pair<std::size_t, std::size_t>> edges_;
  std::vector<std::size_t> degree_;
  std::vector<std::size_t> adj_flat_;
  std::vector<std::size_t> adj_offset_;
  bool finalized_ = false;
};

struct NormalizedLaplacian {
  DenseMatrix matrix;        // n x n
  bool scaled_by_inverse_n = false;
};

/// Symmetric normalization D^-1/2 (A + I) D^-1/2 with
/// D = diag(1 + deg_i), optionally scaled by 1/N.
NormalizedLaplacian normalized_laplacian(const SocialGraph& g, bool scale_by_inverse_n);

/// Batch selector: strictly increasing unique user indices; the implicit 0/1
/// selection matrix B of the batched forms.
class BatchSelector {
 public:
  BatchSelector(std::vector<std::size_t> indices, std::size_t n_users);

  std::span<const std::size_t> indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }

 private:
  std::vector<std::size_t> indices_;
};

/// B * L: the batch rows of the operator.
DenseMatrix batch_rows(const NormalizedLaplacian& lap, const BatchSelector& sel);
/// B * L * B^T: the batch-by-batch block.
DenseMatrix batch_block(const NormalizedLaplacian& lap, const BatchSelector& sel);

}  // namespace p4gcn
