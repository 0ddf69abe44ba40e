// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include "p4gcn/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace p4gcn {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

long long parse_ll(const std::string& s, const std::string& path, std::size_t lineno) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ParseError(path + ":" + std::to_string(lineno) + ": bad integer '" + s + "'");
  }
  return v;
}

double parse_double(const std::string& s, const std::string& path, std::size_t lineno) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path + ":" + std::to_string(lineno) + ": bad number '" + s + "'");
  }
}

template <typename Fn>
void for_each_data_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  std::string line;
  std::size_t lineno = 0;
  std::size_t records = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = tokenize(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    fn(tok, lineno);
    ++records;
  }
  if (records == 0) throw ParseError(path + ": no records");
}

}  // namespace

std::vector<RawRating> load_ratings(const std::string& path) {
  std::vector<RawRating> out;
  for_each_data_line(path, [&](const std::vector<std::string>& tok, std::size_t lineno) {
    if (tok.size() != 3) {
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected 'user item rating'");
    }
    out.push_back(RawRating{parse_ll(tok[0], path, lineno), parse_ll(tok[1], path, lineno),
                            parse_double(tok[2], path, lineno)});
  });
  return out;
}

std::vector<RawTrust> load_trust(const std::string& path) {
  std::vector<RawTrust> out;
  for_each_data_line(path, [&](const std::vector<std::string>& tok, std::size_t lineno) {
    if (tok.size() != 2 && tok.size() != 3) {
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected 'user user [weight]'");
    }
    const double w = tok.size() == 3 ? parse_double(tok[2], path, lineno) : 1.0;
    out.push_back(RawTrust{parse_ll(tok[0], path, lineno), parse_ll(tok[1], path, lineno), w});
  });
  return out;
}

void split_ratings(std::vector<RatingTriple> all, double test_fraction, RngState rng,
                   std::vector<RatingTriple>& train, std::vector<RatingTriple>& test) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("split: test_fraction must be in (0,1)");
  }
  // Fisher-Yates with our deterministic stream.
  for (std::size_t i = all.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(all[i - 1], all[j]);
  }
  const std::size_t n_test =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(all.size())));
  test.assign(all.begin(), all.begin() + n_test);
  train.assign(all.begin() + n_test, all.end());
}

DatasetBundle build_bundle(const std::vector<RawRating>& ratings,
                           const std::vector<RawTrust>& trust, double r_min, double r_max,
                           double test_fraction, std::uint64_t seed,
                           std::string provenance) {
  DatasetBundle b;
  b.r_min = r_min;
  b.r_max = r_max;
  b.provenance = std::move(provenance);

  std::set<long long> user_set;
  std::set<long long> item_set;
  for (const auto& r : ratings) {
    user_set.insert(r.user);
    item_set.insert(r.item);
  }
  for (const auto& t : trust) {
    user_set.insert(t.from);
    user_set.insert(t.to);
  }
  b.user_ids.assign(user_set.begin(), user_set.end());
  b.item_ids.assign(item_set.begin(), item_set.end());
  std::map<long long, std::size_t> user_of;
  std::map<long long, std::size_t> item_of;
  for (std::size_t i = 0; i < b.user_ids.size(); ++i) user_of[b.user_ids[i]] = i;
  for (std::size_t i = 0; i < b.item_ids.size(); ++i) item_of[b.item_ids[i]] = i;
  b.n_users = b.user_ids.size();
  b.n_items = b.item_ids.size();

  std::vector<RatingTriple> all;
  all.reserve(ratings.size());
  for (const auto& r : ratings) {
    double v = r.rating;
    if (v < r_min || v > r_max) {
      v = std::clamp(v, r_min, r_max);
      ++b.clamped_ratings;
    }
    all.push_back(RatingTriple{user_of.at(r.user), item_of.at(r.item), v});
  }
  split_ratings(std::move(all), test_fraction, RngState(seed).fork(0x5350), b.train, b.test);

  b.raw_social_links = trust.size();
  std::set<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& t : trust) {
    if (t.from == t.to) continue;  // Laplacian adds the identity itself
    const std::size_t a = user_of.at(t.from);
    const std::size_t c = user_of.at(t.to);
    edges.insert({std::min(a, c), std::max(a, c)});
  }
  b.social_edges.assign(edges.begin(), edges.end());
  return b;
}

DatasetStats stats(const DatasetBundle& b) {
  DatasetStats s;
  s.users = b.n_users;
  s.items = b.n_items;
  s.ratings = b.n_ratings();
  s.social_links = b.raw_social_links;
  const double nu = static_cast<double>(b.n_users);
  const double ni = static_cast<double>(b.n_items);
  if (nu > 0 && ni > 0) {
    s.density_rating_pct = 100.0 * static_cast<double>(s.ratings) / (nu * ni);
  }
  if (nu > 0) {
    s.density_link_pct = 100.0 * static_cast<double>(s.social_links) / (nu * nu);
  }
  return s;
}

const std::vector<DatasetSpec>& dataset_registry() {
  static const std::vector<DatasetSpec> registry = {
      {"filmtrust", "ratings.txt", "trust.txt", 0.5, 4.0,
       DatasetStats{1508, 2071, 35497, 1853, 1.1366, 0.0815}},
      {"ciaodvd", "ratings.txt", "trust.txt", 1.0, 5.0,
       DatasetStats{7375, 99746, 278483, 111781, 0.0379, 0.2055}},
      {"douban", "ratings.txt", "trust.txt", 1.0, 5.0,
       DatasetStats{3000, 3000, 136891, 7765, 1.5210, 0.0863}},
      {"epinions", "ratings.txt", "trust.txt", 1.0, 5.0,
       DatasetStats{22158, 296277, 728517, 355364, 0.0110, 0.0723}},
      {"synthetic", "ratings.txt", "trust.txt", 0.5, 4.0, std::nullopt},
  };
  return registry;
}

const DatasetSpec* find_dataset(const std::string& name) {
  for (const auto& d : dataset_registry()) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

DatasetBundle load_dataset(const DatasetSpec& spec, const std::string& dir,
                           double test_fraction, std::uint64_t seed) {
  namespace fs = std::filesystem;
  const std::string rpath = (fs::path(dir) / spec.ratings_file).string();
  const std::string tpath = (fs::path(dir) / spec.trust_file).string();
  const auto ratings = load_ratings(rpath);
  std::vector<RawTrust> trust;
  if (fs::exists(tpath)) trust = load_trust(tpath);
  return build_bundle(ratings, trust, spec.r_min, spec.r_max, test_fraction, seed, dir);
}

void write_synthetic_dataset(const std::string& dir, const SynthParams& p,
                             std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  RngState rng = RngState(seed).fork(0x53594e);

  const std::size_t n = p.n_users, m = p.n_items, k = p.latent_dim;
  std::vector<double> u(n * k), v(m * k);
  for (auto& x : u) x = rng.normal();
  for (auto& x : v) x = rng.normal();

  std::set<std::pair<std::size_t, std::size_t>> links;
  while (links.size() < p.n_links) {
    const std::size_t i = rng.uniform_index(n);
    const std::size_t j = rng.uniform_index(n);
    if (i == j) continue;
    links.insert({std::min(i, j), std::max(i, j)});
  }
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& [a, b] : links) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  // Smooth user latents over the graph: socially connected users end up with
  // correlated taste, which is what makes the social branch informative.
  for (int pass = 0; pass < 3; ++pass) {
    std::vector<double> nu = u;
    for (std::size_t i = 0; i < n; ++i) {
      if (adj[i].empty()) continue;
      for (std::size_t c = 0; c < k; ++c) {
        double acc = 0.0;
        for (std::size_t j : adj[i]) acc += u[j * k + c];
        nu[i * k + c] = (1.0 - p.social_smoothing) * u[i * k + c] +
                        p.social_smoothing * acc / static_cast<double>(adj[i].size());
      }
    }
    u = std::move(nu);
  }
  double var = 0.0;
  for (double x : u) var += x * x;
  const double inv_std = var > 0.0 ? 1.0 / std::sqrt(var / static_cast<double>(u.size())) : 1.0;
  for (double& x : u) x *= inv_std;

  std::ofstream rf(fs::path(dir) / "ratings.txt");
  if (!rf) throw ParseError(dir + ": cannot write ratings.txt");
  const double span = p.r_max - p.r_min;
  const std::size_t per_user = std::min(p.ratings_per_user, m);
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::size_t> seen;
    while (seen.size() < per_user) {
      const std::size_t j = rng.uniform_index(m);
      if (!seen.insert(j).second) continue;
      double ip = 0.0;
      for (std::size_t c = 0; c < k; ++c) ip += u[i * k + c] * v[j * k + c];
      ip *= 2.0 / std::sqrt(static_cast<double>(k));
      double r = span / (1.0 + std::exp(-ip)) + p.r_min + p.rating_noise * rng.normal();
      r = std::clamp(r, p.r_min, p.r_max);
      rf << (i + 1) << ' ' << (j + 1) << ' ' << r << '\n';
    }
  }
  std::ofstream tf(fs::path(dir) / "trust.txt");
  if (!tf) throw ParseError(dir + ": cannot write trust.txt");
  for (const auto& [a, b] : links) tf << (a + 1) << ' ' << (b + 1) << " 1\n";
}

}  // namespace p4gcn
