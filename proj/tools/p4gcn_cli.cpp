// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: train / evaluate / stats / selftest / synth / party.
// Exit codes: 0 success, 2 usage, 3 privacy budget exceeded, 4 protocol or
// transport failure.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "p4gcn/dataio.hpp"
#include "p4gcn/sandwich.hpp"
#include "p4gcn/svd.hpp"
#include "p4gcn/trainer.hpp"

namespace {

using namespace p4gcn;

void add_train_flags(CLI::App* cmd, TrainConfig& cfg, std::string& cipher,
                     std::string& no_dp_dummy) {
  (void)no_dp_dummy;
  cmd->add_option("--dataset", cfg.dataset, "Dataset registry name");
  cmd->add_option("--data-dir", cfg.data_dir, "Directory with ratings.txt/trust.txt");
  cmd->add_option("-d,--dim", cfg.d, "Embedding dimension");
  cmd->add_option("--lr", cfg.learning_rate, "Learning rate");
  cmd->add_option("--batch-size", cfg.batch_size, "Records per batch (0 = full)");
  cmd->add_option("--epochs", cfg.epochs, "Training epochs");
  cmd->add_option("-C,--clip", cfg.clip_c, "Row/Frobenius clip coefficient");
  cmd->add_option("--beta", cfg.beta, "Social aggregation degree");
  cmd->add_option("--init-scale", cfg.init_scale, "Embedding init stddev");
  cmd->add_option("--test-fraction", cfg.test_fraction, "Held-out fraction");
  cmd->add_flag("--no-social", [&cfg](std::int64_t) { cfg.social = false; },
                "Disable the social branch (local backbone only)");
  cmd->add_flag("--no-fusion", [&cfg](std::int64_t) { cfg.fusion = false; },
                "Replace the fusion gate by plain averaging");
  cmd->add_flag("--no-laplacian-scale",
                [&cfg](std::int64_t) { cfg.scale_laplacian = false; },
                "Do not scale the normalized Laplacian by 1/N");
  cmd->add_flag("--dp", cfg.dp, "Inject calibrated DP noise");
  cmd->add_flag("--no-dp", [&cfg](std::int64_t) { cfg.dp = false; }, "Disable DP noise");
  cmd->add_option("--epsilon", cfg.epsilon, "Privacy budget epsilon");
  cmd->add_option("--delta", cfg.delta, "Privacy budget delta");
  cmd->add_option("--mode", cipher, "Cipher mode: plaintext | he");
  cmd->add_flag("--stored-state", cfg.stored_state,
                "Keep the encrypted feature state at the social party");
  cmd->add_option("--key-bits", cfg.key_bits, "Paillier modulus bits");
  cmd->add_option("--frac-bits", cfg.frac_bits, "Fixed-point fractional bits");
  cmd->add_option("--seed", cfg.seed, "Run seed");
  cmd->add_option("--r-min", cfg.r_min, "Rating range lower bound override");
  cmd->add_option("--r-max", cfg.r_max, "Rating range upper bound override");
  cmd->add_option("--transport", cfg.transport, "memory | socket");
  cmd->add_option("--connect-host", cfg.connect_host, "Social party host (socket)");
  cmd->add_option("--connect-port", cfg.connect_port, "Social party port (socket)");
  cmd->add_flag("--emit-timing", cfg.emit_timing, "Include wall time in the report");
  cmd->add_option("--report", cfg.report_path, "Write the run report JSON here");
  cmd->add_option("--checkpoint", cfg.checkpoint_path, "Write the best checkpoint here");
}

void apply_cipher(TrainConfig& cfg, const std::string& cipher) {
  if (cipher == "plaintext") {
    cfg.cipher = CipherMode::Plaintext;
  } else if (cipher == "he") {
    cfg.cipher = CipherMode::RealHe;
  } else {
    throw CLI::ValidationError("--mode must be plaintext or he");
  }
}

int cmd_train(const TrainConfig& cfg) {
  const RunReport r = train(cfg);
  std::printf("users=%zu items=%zu train=%zu test=%zu kernel=%s\n", r.n_users, r.n_items,
              r.n_train, r.n_test, r.kernel.c_str());
  for (std::size_t e = 0; e < r.epochs.size(); ++e) {
    std::printf("epoch %3zu  loss %.6f  rmse %.4f  mae %.4f\n", e + 1,
                r.epochs[e].train_loss, r.epochs[e].rmse, r.epochs[e].mae);
  }
  std::printf("best epoch %zu: rmse %.4f mae %.4f\n", r.best_epoch, r.best_metrics.rmse,
              r.best_metrics.mae);
  if (r.accountant.queries > 0) {
    std::printf("privacy: %llu queries, epsilon %.4f at delta\n",
                static_cast<unsigned long long>(r.accountant.queries),
                r.accountant.final_epsilon);
  }
  std::printf("comm: state=%llu train=%llu eval=%llu cells;",
              static_cast<unsigned long long>(r.ledger.tally.state_cells),
              static_cast<unsigned long long>(r.ledger.tally.train_cells),
              static_cast<unsigned long long>(r.ledger.tally.eval_cells));
  std::printf(" closed-form %llu (%s)\n",
              static_cast<unsigned long long>(r.ledger.closed_form_train_cells),
              r.ledger.closed_form_applies
                  ? (r.ledger.closed_form_matches ? "match" : "MISMATCH")
                  : "n/a in this mode");
  std::printf("wall %.1fs\n", r.wall_seconds);
  return r.ledger.closed_form_applies && !r.ledger.closed_form_matches ? 4 : 0;
}

int cmd_stats(const std::string& dataset, const std::string& dir) {
  const DatasetSpec* spec = find_dataset(dataset);
  if (spec == nullptr) {
    std::fprintf(stderr, "unknown dataset: %s\n", dataset.c_str());
    return 2;
  }
  if (!std::filesystem::exists(std::filesystem::path(dir) / spec->ratings_file)) {
    std::printf("dataset         %s (no local copy under %s)\n", spec->name.c_str(),
                dir.c_str());
    if (spec->expected) {
      const auto& e = *spec->expected;
      std::printf("published       users=%zu items=%zu ratings=%zu links=%zu\n", e.users,
                  e.items, e.ratings, e.social_links);
      std::printf("published       density_rating=%.4f%% density_link=%.4f%%\n",
                  e.density_rating_pct, e.density_link_pct);
    }
    return 0;
  }
  const DatasetBundle b = load_dataset(*spec, dir, 0.2, 1);
  const DatasetStats s = stats(b);
  std::printf("dataset         %s\n", spec->name.c_str());
  std::printf("users           %zu\n", s.users);
  std::printf("items           %zu\n", s.items);
  std::printf("ratings         %zu\n", s.ratings);
  std::printf("social links    %zu\n", s.social_links);
  std::printf("density_rating  %.4f%%\n", s.density_rating_pct);
  std::printf("density_link    %.4f%%\n", s.density_link_pct);
  if (b.clamped_ratings > 0) {
    std::printf("warning: %zu ratings clamped into [%.2f, %.2f]\n", b.clamped_ratings,
                b.r_min, b.r_max);
  }
  if (spec->expected) {
    const auto& e = *spec->expected;
    const bool match = e.users == s.users && e.items == s.items &&
                       e.ratings == s.ratings && e.social_links == s.social_links;
    std::printf("published       users=%zu items=%zu ratings=%zu links=%zu -> %s\n",
                e.users, e.items, e.ratings, e.social_links,
                match ? "match" : "MISMATCH with local copy");
  }
  return 0;
}

int cmd_selftest(const std::string& cipher, int key_bits, std::uint64_t seed) {
  const CipherMode mode = cipher == "he" ? CipherMode::RealHe : CipherMode::Plaintext;
  RngState rng(seed);
  int failures = 0;
  auto check = [&failures](const char* name, bool ok) {
    std::printf("[%s] %s\n", ok ? "ok" : "FAIL", name);
    if (!ok) ++failures;
  };

  auto keys = std::make_shared<KeyPair>(keygen(key_bits, rng));
  {
    RngState r2 = rng.fork(1);
    bool ok = true;
    for (int i = 0; i < 25; ++i) {
      const mpz_class m = random_below(r2, keys->pub.n);
      ok = ok && decrypt(*keys, encrypt(keys->pub, m, r2)) == m;
    }
    check("paillier roundtrip", ok);
  }
  {
    FixedPointCodec codec;
    MiddleHolder mid{DenseMatrix{{0.25, -1.5}, {2.0, 0.5}, {-0.75, 1.0}}, codec, keys, seed};
    SideHolder side{DenseMatrix{{1.0, 0.0, -0.5}, {0.25, -1.0, 2.0}},
                    DenseMatrix{{0.5, -1.0, 0.25}, {1.5, 0.75, -0.5}},
                    codec,
                    std::nullopt,
                    seed};
    const DenseMatrix got = sandwich_multiply(side, mid, mode);
    const DenseMatrix want = matmul(matmul(side.l, mid.m), side.n);
    check("sandwich triple product", frobenius_norm(got - want) < 1e-6);
  }
  {
    RngState r3 = rng.fork(2);
    DenseMatrix l(3, 3), m(3, 3), n(3, 3);
    for (auto* mm : {&l, &m, &n}) {
      for (std::size_t i = 0; i < mm->size(); ++i) mm->data()[i] = r3.normal();
    }
    bool ok = true;
    try {
      const auto pf = perturb_factorization(l, m, n, {0, 0}, 1e-6);
      ok = pf.residual <= 1e-8 && !(pf.l_prime == l);
    } catch (const RankConditionError&) {
      ok = false;
    }
    check("factorization ambiguity witness", ok);
  }
  {
    // Stored-state update over the wire against a plaintext mirror.
    SocialGraph g(4);
    g.add_edge(0, 1);
    g.add_edge(2, 3);
    g.finalize();
    SocialPartyServer server(std::move(g), 3, 10.0, false, seed);
    TrainConfig tc;
    tc.d = 3;
    tc.clip_c = 10.0;
    tc.cipher = mode;
    tc.stored_state = true;
    tc.key_bits = key_bits;
    tc.seed = seed;
    tc.scale_laplacian = false;
    RecommenderLink link(std::make_unique<LoopTransport>(server.handler()),
                         tc.protocol_config(8), seed);
    link.open_with_keys(mode == CipherMode::RealHe ? keys : nullptr);
    DenseMatrix x(4, 3);
    RngState r4 = rng.fork(3);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = 0.2 * r4.normal();
    link.push_state(x);
    const std::vector<std::size_t> batch{1, 3};
    DenseMatrix mid(2, 3);
    for (std::size_t i = 0; i < mid.size(); ++i) mid.data()[i] = 0.05 * r4.normal();
    const DenseMatrix gupd = link.backward(batch, mid);
    const DenseMatrix y = link.forward(batch, QueryPurpose::Eval);
    // Plaintext mirror of the stored update.
    DenseMatrix xm = x;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (std::size_t c = 0; c < 3; ++c) xm(batch[i], c) -= gupd(i, c);
    }
    const DenseMatrix lb = batch_rows(server.laplacian(), BatchSelector({1, 3}, 4));
    const DenseMatrix want = matmul(matmul(lb, xm), server.w2());
    check("stored-state homomorphic update", frobenius_norm(y - want) < 1e-5);
    link.bye();
  }
  return failures == 0 ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-party private social-recommendation trainer"};
  app.require_subcommand(1);

  TrainConfig cfg;
  std::string cipher = "plaintext";
  std::string dummy;

  auto* train_cmd = app.add_subcommand("train", "Train end to end");
  add_train_flags(train_cmd, cfg, cipher, dummy);

  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  std::string ckpt_path, eval_dir;
  eval_cmd->add_option("--checkpoint", ckpt_path, "Checkpoint path")->required();
  eval_cmd->add_option("--data-dir", eval_dir, "Dataset directory")->required();

  auto* stats_cmd = app.add_subcommand("stats", "Dataset statistics");
  std::string stats_dataset = "synthetic", stats_dir = "data/synthetic";
  stats_cmd->add_option("--dataset", stats_dataset, "Registry name");
  stats_cmd->add_option("--data-dir", stats_dir, "Dataset directory");

  auto* self_cmd = app.add_subcommand("selftest", "Protocol self test on toy shapes");
  std::string self_mode = "he";
  int self_bits = 512;
  std::uint64_t self_seed = 7;
  self_cmd->add_option("--mode", self_mode, "plaintext | he");
  self_cmd->add_option("--key-bits", self_bits, "Paillier modulus bits");
  self_cmd->add_option("--seed", self_seed, "Seed");

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset");
  SynthParams sp;
  std::string synth_dir = "data/synthetic";
  std::uint64_t synth_seed = 42;
  synth_cmd->add_option("--out", synth_dir, "Output directory");
  synth_cmd->add_option("--users", sp.n_users, "Users");
  synth_cmd->add_option("--items", sp.n_items, "Items");
  synth_cmd->add_option("--ratings-per-user", sp.ratings_per_user, "Ratings per user");
  synth_cmd->add_option("--links", sp.n_links, "Social links");
  synth_cmd->add_option("--seed", synth_seed, "Seed");

  auto* party_cmd = app.add_subcommand("party", "Run the social party (socket server)");
  TrainConfig pcfg;
  std::string pcipher = "plaintext";
  int party_port = 7411;
  add_train_flags(party_cmd, pcfg, pcipher, dummy);
  party_cmd->add_option("--port", party_port, "Listen port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) {
      apply_cipher(cfg, cipher);
      return cmd_train(cfg);
    }
    if (*eval_cmd) {
      const EvalMetrics m = evaluate_checkpoint(ckpt_path, eval_dir);
      std::printf("rmse %.6f mae %.6f\n", m.rmse, m.mae);
      return 0;
    }
    if (*stats_cmd) return cmd_stats(stats_dataset, stats_dir);
    if (*self_cmd) return cmd_selftest(self_mode, self_bits, self_seed);
    if (*synth_cmd) {
      write_synthetic_dataset(synth_dir, sp, synth_seed);
      std::printf("wrote %s/ratings.txt and trust.txt\n", synth_dir.c_str());
      return 0;
    }
    if (*party_cmd) {
      apply_cipher(pcfg, pcipher);
      std::printf("social party listening on port %d\n", party_port);
      run_party_server(pcfg, party_port);
      return 0;
    }
  } catch (const BudgetExceeded& e) {
    std::fprintf(stderr, "privacy budget exceeded: %s\n", e.what());
    return 3;
  } catch (const ProtocolError& e) {
    std::fprintf(stderr, "protocol failure: %s\n", e.what());
    return 4;
  } catch (const TransportError& e) {
    std::fprintf(stderr, "transport failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
