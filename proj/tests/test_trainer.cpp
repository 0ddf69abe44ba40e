// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>
#include <atomic>
#include <thread>

#include "p4gcn/trainer.hpp"

using namespace p4gcn;
namespace fs = std::filesystem;

namespace {

struct SynthFixture {
  fs::path dir;
  SynthFixture() {
    dir = fs::temp_directory_path() / ("p4gcn_trainer_" + std::to_string(::getpid()));
    if (!fs::exists(dir / "ratings.txt")) {
      SynthParams p;
      p.n_users = 40;
      p.n_items = 50;
      p.ratings_per_user = 10;
      p.n_links = 120;
      write_synthetic_dataset(dir.string(), p, 77);
    }
  }
};

TrainConfig toy_config(const SynthFixture& f) {
  TrainConfig cfg;
  cfg.dataset = "synthetic";
  cfg.data_dir = f.dir.string();
  cfg.d = 4;
  cfg.learning_rate = 20.0;
  cfg.epochs = 3;
  cfg.batch_size = 0;
  cfg.clip_c = 5.0;
  cfg.beta = 1.0;
  cfg.scale_laplacian = false;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("plaintext dp-off runs are byte-reproducible") {
  SynthFixture f;
  const TrainConfig cfg = toy_config(f);
  const RunReport a = train(cfg);
  const RunReport b = train(cfg);
  CHECK(report_to_json(a, cfg) == report_to_json(b, cfg));
  TrainConfig other = cfg;
  other.seed = 6;
  const RunReport c = train(other);
  CHECK(report_to_json(a, cfg) != report_to_json(c, other));
}

TEST_CASE("learning rate zero leaves metrics unchanged across epochs") {
  SynthFixture f;
  TrainConfig cfg = toy_config(f);
  cfg.learning_rate = 0.0;
  cfg.epochs = 2;
  const RunReport r = train(cfg);
  CHECK(r.epochs[0].rmse == doctest::Approx(r.epochs[1].rmse));
  CHECK(r.epochs[0].mae == doctest::Approx(r.epochs[1].mae));
}

TEST_CASE("social off never opens protocol traffic") {
  SynthFixture f;
  TrainConfig cfg = toy_config(f);
  cfg.social = false;
  const RunReport r = train(cfg);
  CHECK(r.ledger.tally.state_cells == 0);
  CHECK(r.ledger.tally.train_cells == 0);
  CHECK(r.ledger.transport.messages_sent == 0);
  CHECK(r.accountant.queries == 0);
  CHECK(r.final_metrics.rmse > 0.0);
}

TEST_CASE("stored-state mode matches the closed-form ciphertext count") {
  SynthFixture f;
  TrainConfig cfg = toy_config(f);
  cfg.stored_state = true;
  cfg.batch_size = 64;
  cfg.epochs = 4;
  const RunReport r = train(cfg);
  REQUIRE(r.ledger.closed_form_applies);
  CHECK(r.ledger.closed_form_matches);
  CHECK(r.ledger.tally.state_cells + r.ledger.tally.train_cells ==
        40 * 4 + 3 * r.ledger.sum_batch_users * 4);
}

TEST_CASE("fresh mode resends state every iteration") {
  SynthFixture f;
  TrainConfig cfg = toy_config(f);
  cfg.epochs = 2;
  const RunReport r = train(cfg);
  // One state push per train iteration plus one per eval query.
  const std::uint64_t pushes = r.ledger.iterations + r.ledger.tally.eval_queries;
  CHECK(r.ledger.tally.state_cells == pushes * 40 * 4);
}

TEST_CASE("dp accounting lands exactly on the configured budget") {
  SynthFixture f;
  TrainConfig cfg = toy_config(f);
  cfg.dp = true;
  cfg.epsilon = 8.0;
  cfg.delta = 1e-4;
  cfg.epochs = 3;
  const RunReport r = train(cfg);
  CHECK(r.accountant.queries == 2 * r.ledger.iterations);
  // Full-batch: every user is in every batch, so the max user consumes the
  // whole planned budget.
  CHECK(r.accountant.final_epsilon == doctest::Approx(8.0).epsilon(1e-5));
}

TEST_CASE("checkpoint save/load roundtrip and evaluation consistency") {
  SynthFixture f;
  TrainConfig cfg = toy_config(f);
  const fs::path ck = f.dir / "ck.txt";
  cfg.checkpoint_path = ck.string();
  RecommenderState best;
  const RunReport r = train_on_bundle(
      cfg, load_dataset(*find_dataset("synthetic"), cfg.data_dir, cfg.test_fraction,
                        cfg.seed),
      &best);
  TrainConfig meta;
  double rmin = 0.0, rmax = 0.0;
  const RecommenderState loaded = load_checkpoint(ck.string(), meta, rmin, rmax);
  CHECK(loaded.x_user0 == best.x_user0);  // hex-float roundtrip is exact
  CHECK(loaded.w_f2 == best.w_f2);
  CHECK(meta.d == cfg.d);
  CHECK(rmin == doctest::Approx(0.5));

  const EvalMetrics m = evaluate_checkpoint(ck.string(), cfg.data_dir);
  CHECK(m.rmse == doctest::Approx(r.best_metrics.rmse).epsilon(1e-9));
  CHECK(m.mae == doctest::Approx(r.best_metrics.mae).epsilon(1e-9));
}

TEST_CASE("socket transport trains to the same result as memory transport") {
  SynthFixture f;
  TrainConfig cfg = toy_config(f);
  cfg.epochs = 2;
  const RunReport mem = train(cfg);

  TrainConfig scfg = cfg;
  scfg.transport = "socket";
  int port = 0;
  std::atomic<bool> bound{false};
  std::thread party(
      [&] { run_party_server(cfg, 0, &port, [&bound] { bound.store(true); }); });
  while (!bound.load()) std::this_thread::yield();
  scfg.connect_port = port;
  const RunReport sock = train(scfg);
  party.join();
  CHECK(sock.final_metrics.rmse == doctest::Approx(mem.final_metrics.rmse).epsilon(1e-12));
  CHECK(sock.ledger.tally.train_cells == mem.ledger.tally.train_cells);
  CHECK(sock.ledger.transport.bytes_sent == mem.ledger.transport.bytes_sent);
}

TEST_CASE("he toy training tracks plaintext within codec error") {
  SynthFixture f;
  TrainConfig cfg = toy_config(f);
  cfg.epochs = 2;
  cfg.learning_rate = 5.0;
  const RunReport plain = train(cfg);
  TrainConfig he = cfg;
  he.cipher = CipherMode::RealHe;
  he.key_bits = 512;
  const RunReport enc = train(he);
  CHECK(enc.final_metrics.rmse == doctest::Approx(plain.final_metrics.rmse).epsilon(1e-6));
  CHECK(enc.final_metrics.mae == doctest::Approx(plain.final_metrics.mae).epsilon(1e-6));
}

}  // TEST_SUITE

TEST_SUITE("trainer") {

TEST_CASE("rmse is never below mae on any epoch") {
  SynthFixture f;
  TrainConfig cfg = toy_config(f);
  cfg.epochs = 4;
  const RunReport r = train(cfg);
  for (const auto& e : r.epochs) CHECK(e.rmse >= e.mae);
}

}  // TEST_SUITE


TEST_SUITE("trainer") {

TEST_CASE("zero training epochs move only the initial state ciphertexts") {
  SynthFixture f;
  TrainConfig cfg = toy_config(f);
  cfg.epochs = 0;
  cfg.stored_state = true;
  const RunReport r = train(cfg);
  CHECK(r.ledger.tally.state_cells == 40 * 4);  // N d, pushed once
  CHECK(r.ledger.tally.train_cells == 0);
  CHECK(r.ledger.closed_form_matches);
}

}  // TEST_SUITE
