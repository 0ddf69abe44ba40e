// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "p4gcn/rng.hpp"

namespace p4gcn {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RatingTriple {
  std::size_t user = 0;
  std::size_t item = 0;
  double rating = 0.0;
};

/// A parsed line before identifier remapping.
struct RawRating {
  long long user;
  long long item;
  double rating;
};
struct RawTrust {
  long long from;
  long long to;
  double weight;
};

/// "user item rating" lines, whitespace- or comma-separated; bad lines are
/// rejected with their line number, an empty file is an error.
std::vector<RawRating> load_ratings(const std::string& path);
/// "user user weight" lines; self-edges are dropped (the Laplacian adds the
/// identity itself).
std::vector<RawTrust> load_trust(const std::string& path);

/// Deterministic global random split; test gets round(fraction * n) records.
void split_ratings(std::vector<RatingTriple> all, double test_fraction, RngState rng,
                   std::vector<RatingTriple>& train, std::vector<RatingTriple>& test);

struct DatasetBundle {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::vector<RatingTriple> train;
  std::vector<RatingTriple> test;
  /// Deduplicated undirected relations among known users (i < j).
  std::vector<std::pair<std::size_t, std::size_t>> social_edges;
  /// Raw directed trust statements, as counted by dataset statistics tables.
  std::size_t raw_social_links = 0;
  std::size_t clamped_ratings = 0;
  double r_min = 1.0;
  double r_max = 5.0;
  std::string provenance;

  // Contiguous index -> original identifier (users cover rating + trust files).
  std::vector<long long> user_ids;
  std::vector<long long> item_ids;

  std::size_t n_ratings() const { return train.size() + test.size(); }
};

/// Remaps identifiers (users sorted over rating+trust files, items over
/// ratings), binarizes and symmetrizes trust, clamps out-of-range ratings,
/// and splits train/test deterministically.
DatasetBundle build_bundle(const std::vector<RawRating>& ratings,
                           const std::vector<RawTrust>& trust, double r_min,
                           double r_max, double test_fraction, std::uint64_t seed,
                           std::string provenance);

struct DatasetStats {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t ratings = 0;
  std::size_t social_links = 0;
  double density_rating_pct = 0.0;
  double density_link_pct = 0.0;
};

DatasetStats stats(const DatasetBundle& bundle);

/// Built-in dataset definitions with their published statistics, used by the
/// stats subcommand to cross-check local copies.
struct DatasetSpec {
  std::string name;
  std::string ratings_file;
  std::string trust_file;
  double r_min;
  double r_max;
  std::optional<DatasetStats> expected;
};

const std::vector<DatasetSpec>& dataset_registry();
const DatasetSpec* find_dataset(const std::string& name);

/// Loads `<dir>/<spec.ratings_file>` and `<dir>/<spec.trust_file>`.
DatasetBundle load_dataset(const DatasetSpec& spec, const std::string& dir,
                           double test_fraction, std::uint64_t seed);

struct SynthParams {
  std::size_t n_users = 200;
  std::size_t n_items = 250;
  std::size_t latent_dim = 4;
  std::size_t ratings_per_user = 45;
  std::size_t n_links = 800;
  double social_smoothing = 0.75;
  double rating_noise = 0.1;
  double r_min = 0.5;
  double r_max = 4.0;
};

/// Writes ratings.txt / trust.txt for a synthetic world whose user latents
/// are smoothed over the social graph, so the social branch carries signal.
void write_synthetic_dataset(const std::string& dir, const SynthParams& p,
                             std::uint64_t seed);

}  // namespace p4gcn
