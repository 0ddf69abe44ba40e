// Copyright (c) 2026 the p4gcn authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
#include "p4gcn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "p4gcn/kernels.hpp"

namespace p4gcn {

namespace {

constexpr std::uint64_t kStateStreamTag = 0x5354;
constexpr std::uint64_t kShuffleStreamTag = 0x5348;

using ordered_json = nlohmann::ordered_json;

std::pair<double, double> rating_range(const TrainConfig& cfg, const DatasetBundle& b) {
  const double rmin = cfg.r_min != 0.0 || cfg.r_max != 0.0 ? cfg.r_min : b.r_min;
  const double rmax = cfg.r_min != 0.0 || cfg.r_max != 0.0 ? cfg.r_max : b.r_max;
  if (!(rmax > rmin)) throw std::invalid_argument("train: bad rating range");
  return {rmin, rmax};
}

SocialGraph graph_from_bundle(const DatasetBundle& b) {
  SocialGraph g(b.n_users);
  for (const auto& [i, j] : b.social_edges) g.add_edge(i, j);
  g.finalize();
  return g;
}

}  // namespace

ModelConfig TrainConfig::model_config(double rmin, double rmax) const {
  ModelConfig m;
  m.d = d;
  m.clip_c = clip_c;
  m.beta = beta;
  m.r_min = rmin;
  m.r_max = rmax;
  m.fusion = fusion;
  m.social = social;
  m.init_scale = init_scale;
  m.resend_state = !stored_state;
  return m;
}

ProtocolConfig TrainConfig::protocol_config(std::uint64_t queries_planned) const {
  ProtocolConfig p;
  p.cipher = cipher;
  p.dp = dp;
  p.stored_state = stored_state;
  p.frac_bits = frac_bits;
  p.codec_window = codec_window;
  p.clip_c = clip_c;
  p.epsilon = epsilon;
  p.delta = delta;
  p.queries_planned = queries_planned;
  p.noise_seed = seed;
  p.feature_dim = static_cast<std::uint32_t>(d);
  return p;
}

RunReport train(const TrainConfig& cfg) {
  const DatasetSpec* spec = find_dataset(cfg.dataset);
  if (spec == nullptr) throw std::invalid_argument("unknown dataset: " + cfg.dataset);
  const DatasetBundle bundle = load_dataset(*spec, cfg.data_dir, cfg.test_fraction, cfg.seed);
  return train_on_bundle(cfg, bundle);
}

RunReport train_on_bundle(const TrainConfig& cfg, const DatasetBundle& bundle,
                          RecommenderState* best_state_out) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto [rmin, rmax] = rating_range(cfg, bundle);
  const ModelConfig mcfg = cfg.model_config(rmin, rmax);

  const std::size_t n_train = bundle.train.size();
  if (n_train == 0) throw std::invalid_argument("train: empty training split");
  const std::size_t bs = cfg.batch_size == 0 ? n_train : cfg.batch_size;
  const std::size_t batches_per_epoch = (n_train + bs - 1) / bs;
  const std::uint64_t iterations =
      static_cast<std::uint64_t>(cfg.epochs) * batches_per_epoch;
  const std::uint64_t queries_planned = 2 * std::max<std::uint64_t>(iterations, 1);

  // The social party: in memory mode it lives here (behind the same frame
  // protocol); in socket mode we dial a separately launched process.
  std::unique_ptr<SocialPartyServer> server;
  std::unique_ptr<Transport> transport;
  if (cfg.transport == "memory") {
    server = std::make_unique<SocialPartyServer>(graph_from_bundle(bundle),
                                                 static_cast<std::uint32_t>(cfg.d),
                                                 cfg.clip_c, cfg.scale_laplacian, cfg.seed);
    auto* raw = server.get();
    transport = std::make_unique<LoopTransport>(
        [raw](const Frame& f) { return raw->handle(f); });
  } else if (cfg.transport == "socket") {
    transport = SocketTransport::connect(cfg.connect_host, cfg.connect_port);
  } else {
    throw std::invalid_argument("unknown transport: " + cfg.transport);
  }

  RecommenderLink link(std::move(transport), cfg.protocol_config(queries_planned),
                       cfg.seed);
  if (cfg.social) link.open(cfg.key_bits);

  RngState init_rng = RngState(cfg.seed).fork(kStateStreamTag);
  RecommenderState state =
      RecommenderState::init(bundle.n_users, bundle.n_items, mcfg, init_rng);
  const RatingGraph rg = RatingGraph::build(bundle.n_users, bundle.n_items, bundle.train);

  if (cfg.social && cfg.stored_state) {
    link.push_state(clip_rows(state.x_user0, cfg.clip_c));
  }

  RunReport report;
  report.n_users = bundle.n_users;
  report.n_items = bundle.n_items;
  report.n_train = n_train;
  report.n_test = bundle.test.size();
  report.kernel = kern::active_kernel_name();
  report.best_metrics = {1.0e300, 1.0e300};

  RngState shuffle_rng = RngState(cfg.seed).fork(kShuffleStreamTag);
  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

  RecommenderState best_state = state;
  std::uint64_t sum_batch_users = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n_train; i > 1; --i) {
      const std::size_t j = shuffle_rng.uniform_index(i);
      std::swap(order[i - 1], order[j]);
    }
    double loss_acc = 0.0;
    for (std::size_t start = 0; start < n_train; start += bs) {
      const std::size_t stop = std::min(start + bs, n_train);
      std::vector<RatingTriple> recs;
      recs.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) recs.push_back(bundle.train[order[i]]);
      Batch batch = Batch::from_records(std::move(recs));
      sum_batch_users += batch.users.size();
      const ForwardTrace trace =
          model_forward(state, rg, batch, link, mcfg, QueryPurpose::Train);
      loss_acc += trace.loss * static_cast<double>(batch.records.size());
      const Gradients grads =
          model_backward(state, rg, batch, trace, link, mcfg, cfg.learning_rate);
      sgd_step(state, grads, cfg.learning_rate);
    }

    EpochRecord rec;
    rec.train_loss = loss_acc / static_cast<double>(n_train);
    if (!bundle.test.empty()) {
      const EvalMetrics m = evaluate(state, rg, bundle.test, link, mcfg);
      rec.rmse = m.rmse;
      rec.mae = m.mae;
      if (m.rmse < report.best_metrics.rmse) {
        report.best_metrics = m;
        report.best_epoch = epoch + 1;
        best_state = state;
      }
      report.final_metrics = m;
    }
    report.epochs.push_back(rec);
  }

  if (cfg.social) report.accountant = link.bye();

  report.ledger.tally = link.tally();
  report.ledger.transport = link.transport_counters();
  report.ledger.iterations = iterations;
  report.ledger.sum_batch_users = sum_batch_users;
  report.ledger.closed_form_train_cells =
      static_cast<std::uint64_t>(bundle.n_users) * cfg.d + 3 * sum_batch_users * cfg.d;
  report.ledger.closed_form_applies = cfg.social && cfg.stored_state;
  report.ledger.closed_form_matches =
      report.ledger.closed_form_applies &&
      report.ledger.tally.state_cells + report.ledger.tally.train_cells ==
          report.ledger.closed_form_train_cells;

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (best_state_out != nullptr) *best_state_out = best_state;
  if (!cfg.checkpoint_path.empty()) {
    save_checkpoint(cfg.checkpoint_path, best_state, cfg, rmin, rmax);
  }
  if (!cfg.report_path.empty()) {
    std::ofstream out(cfg.report_path);
    out << report_to_json(report, cfg) << '\n';
  }
  return report;
}

std::string report_to_json(const RunReport& report, const TrainConfig& cfg) {
  ordered_json j;
  j["config"] = {
      {"dataset", cfg.dataset},
      {"d", cfg.d},
      {"learning_rate", cfg.learning_rate},
      {"batch_size", cfg.batch_size},
      {"epochs", cfg.epochs},
      {"clip_c", cfg.clip_c},
      {"beta", cfg.beta},
      {"social", cfg.social},
      {"fusion", cfg.fusion},
      {"scale_laplacian", cfg.scale_laplacian},
      {"dp", cfg.dp},
      {"epsilon", cfg.epsilon},
      {"delta", cfg.delta},
      {"cipher", cfg.cipher == CipherMode::RealHe ? "he" : "plaintext"},
      {"stored_state", cfg.stored_state},
      {"seed", cfg.seed},
  };
  j["data"] = {{"users", report.n_users},
               {"items", report.n_items},
               {"train", report.n_train},
               {"test", report.n_test}};
  ordered_json epochs = ordered_json::array();
  for (const auto& e : report.epochs) {
    epochs.push_back({{"train_loss", e.train_loss}, {"rmse", e.rmse}, {"mae", e.mae}});
  }
  j["epochs"] = epochs;
  j["final"] = {{"rmse", report.final_metrics.rmse}, {"mae", report.final_metrics.mae}};
  j["best"] = {{"epoch", report.best_epoch},
               {"rmse", report.best_metrics.rmse},
               {"mae", report.best_metrics.mae}};
  j["privacy"] = {{"queries", report.accountant.queries},
                  {"max_eta", report.accountant.per_user_eta.empty()
                                  ? 0.0
                                  : *std::max_element(report.accountant.per_user_eta.begin(),
                                                      report.accountant.per_user_eta.end())},
                  {"final_epsilon", report.accountant.final_epsilon},
                  {"delta", cfg.delta}};
  j["communication"] = {
      {"state_cells", report.ledger.tally.state_cells},
      {"train_cells", report.ledger.tally.train_cells},
      {"eval_cells", report.ledger.tally.eval_cells},
      {"update_cells", report.ledger.tally.update_cells},
      {"train_queries", report.ledger.tally.train_queries},
      {"eval_queries", report.ledger.tally.eval_queries},
      {"messages_sent", report.ledger.transport.messages_sent},
      {"messages_received", report.ledger.transport.messages_received},
      {"bytes_sent", report.ledger.transport.bytes_sent},
      {"bytes_received", report.ledger.transport.bytes_received},
      {"iterations", report.ledger.iterations},
      {"sum_batch_users", report.ledger.sum_batch_users},
      {"closed_form_train_cells", report.ledger.closed_form_train_cells},
      {"closed_form_applies", report.ledger.closed_form_applies},
      {"closed_form_matches", report.ledger.closed_form_matches},
  };
  j["kernel"] = report.kernel;
  if (cfg.emit_timing) j["wall_seconds"] = report.wall_seconds;
  return j.dump(2);
}

namespace {

void write_matrix_section(std::ostream& out, const std::string& name,
                          const DenseMatrix& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  char buf[40];
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%a", m.data()[i]);
    out << buf << (i + 1 == m.size() ? '\n' : ' ');
  }
}

DenseMatrix read_matrix_section(std::istream& in, const std::string& expect) {
  std::string name;
  std::size_t rows = 0, cols = 0;
  if (!(in >> name >> rows >> cols) || name != expect) {
    throw ParseError("checkpoint: expected section " + expect);
  }
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::string tok;
    if (!(in >> tok)) throw ParseError("checkpoint: truncated section " + expect);
    m.data()[i] = std::strtod(tok.c_str(), nullptr);
  }
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const RecommenderState& state,
                     const TrainConfig& cfg, double rmin, double rmax) {
  std::ofstream out(path);
  if (!out) throw ParseError("checkpoint: cannot write " + path);
  out << "p4gcn-checkpoint v1\n";
  out << "meta " << cfg.d << ' ' << cfg.clip_c << ' ' << cfg.beta << ' ' << rmin << ' '
      << rmax << ' ' << (cfg.fusion ? 1 : 0) << ' ' << (cfg.social ? 1 : 0) << ' '
      << (cfg.scale_laplacian ? 1 : 0) << ' ' << cfg.seed << '\n';
  write_matrix_section(out, "x_user0", state.x_user0);
  write_matrix_section(out, "x_item0", state.x_item0);
  write_matrix_section(out, "w_p1", state.w_p1);
  out << "bias " << state.bias.size() << '\n';
  char buf[40];
  for (std::size_t i = 0; i < state.bias.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%a", state.bias[i]);
    out << buf << (i + 1 == state.bias.size() ? '\n' : ' ');
  }
  write_matrix_section(out, "w_f1", state.w_f1);
  write_matrix_section(out, "w_f2", state.w_f2);
}

RecommenderState load_checkpoint(const std::string& path, TrainConfig& cfg_out,
                                 double& rmin_out, double& rmax_out) {
  std::ifstream in(path);
  if (!in) throw ParseError("checkpoint: cannot open " + path);
  std::string word, version;
  in >> word >> version;
  if (word != "p4gcn-checkpoint" || version != "v1") {
    throw ParseError("checkpoint: unrecognized header");
  }
  int fusion = 0, social = 0, scale = 0;
  in >> word;
  if (word != "meta") throw ParseError("checkpoint: missing meta");
  in >> cfg_out.d >> cfg_out.clip_c >> cfg_out.beta >> rmin_out >> rmax_out >> fusion >>
      social >> scale >> cfg_out.seed;
  cfg_out.fusion = fusion != 0;
  cfg_out.social = social != 0;
  cfg_out.scale_laplacian = scale != 0;
  RecommenderState s;
  s.x_user0 = read_matrix_section(in, "x_user0");
  s.x_item0 = read_matrix_section(in, "x_item0");
  s.w_p1 = read_matrix_section(in, "w_p1");
  std::size_t blen = 0;
  in >> word >> blen;
  if (word != "bias") throw ParseError("checkpoint: missing bias");
  s.bias.resize(blen);
  for (auto& v : s.bias) {
    std::string tok;
    in >> tok;
    v = std::strtod(tok.c_str(), nullptr);
  }
  s.w_f1 = read_matrix_section(in, "w_f1");
  s.w_f2 = read_matrix_section(in, "w_f2");
  return s;
}

EvalMetrics evaluate_checkpoint(const std::string& path, const std::string& data_dir) {
  TrainConfig cfg;
  double rmin = 0.0, rmax = 0.0;
  const RecommenderState state = load_checkpoint(path, cfg, rmin, rmax);
  // The dataset name is whichever registry entry matches the directory's
  // files; default decode via synthetic-compatible plain files.
  DatasetSpec spec{"checkpoint", "ratings.txt", "trust.txt", rmin, rmax, std::nullopt};
  const DatasetBundle bundle = load_dataset(spec, data_dir, cfg.test_fraction, cfg.seed);
  const RatingGraph rg = RatingGraph::build(bundle.n_users, bundle.n_items, bundle.train);

  auto server = std::make_unique<SocialPartyServer>(
      graph_from_bundle(bundle), static_cast<std::uint32_t>(cfg.d), cfg.clip_c,
      cfg.scale_laplacian, cfg.seed);
  auto* raw = server.get();
  RecommenderLink link(
      std::make_unique<LoopTransport>([raw](const Frame& f) { return raw->handle(f); }),
      cfg.protocol_config(1), cfg.seed);
  const ModelConfig mcfg = cfg.model_config(rmin, rmax);
  if (cfg.social) {
    link.open(cfg.key_bits);
    link.push_state(clip_rows(state.x_user0, cfg.clip_c));
  }
  return evaluate(state, rg, bundle.test, link, mcfg);
}

void run_party_server(const TrainConfig& cfg, int port, int* bound_port,
                      std::function<void()> ready) {
  const DatasetSpec* spec = find_dataset(cfg.dataset);
  if (spec == nullptr) throw std::invalid_argument("unknown dataset: " + cfg.dataset);
  const DatasetBundle bundle = load_dataset(*spec, cfg.data_dir, cfg.test_fraction, cfg.seed);
  SocialPartyServer server(graph_from_bundle(bundle), static_cast<std::uint32_t>(cfg.d),
                           cfg.clip_c, cfg.scale_laplacian, cfg.seed);
  auto transport = accept_one(port, bound_port, std::move(ready));
  serve_frames(*transport, server.handler());
}

}  // namespace p4gcn
