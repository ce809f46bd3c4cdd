/*
 * Copyright 2026 The rfclust Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// rfclust: gen | train | eval | serve
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error. Progress goes to
// stderr; reports go to files.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "rfclust/artifact.hpp"
#include "rfclust/config.hpp"
#include "rfclust/errors.hpp"
#include "rfclust/metrics.hpp"
#include "rfclust/service.hpp"
#include "rfclust/sweep.hpp"

namespace fs = std::filesystem;
using namespace rfclust;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  bool quiet = false;
};

void progress(const Common& c, const std::string& line) {
  if (!c.quiet) std::cerr << line << '\n';
}

void write_json(const fs::path& path, const nlohmann::json& doc) { write_file_atomic(path, doc.dump(2) + "\n"); }

Dataset load_any(const std::string& path) { return load_dataset(path, format_from_path(path)); }

// ---------------------------------------------------------------- gen

struct GenArgs {
  int classes = 3;
  std::size_t n = 1000;
  std::string profile;
  std::string format;
};

int cmd_gen(const Common& c, const GenArgs& a) {
  if (c.out.empty()) throw UsageError("gen needs --out");
  SyntheticProfile p = a.profile.empty() ? default_profile(a.classes, c.seed.value_or(0)) : load_profile(a.profile);
  if (c.seed) p.seed = *c.seed;
  p.validate();
  const Dataset ds = synth_generate(p, a.n);
  const DataFormat fmt = a.format.empty() ? format_from_path(c.out) : parse_format(a.format);
  save_dataset(ds, c.out, fmt);
  progress(c, "wrote " + std::to_string(ds.size()) + " sweeps to " + c.out);
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string arch;
  std::string data;
  std::optional<int> epochs;
  std::optional<int> k;
  std::optional<std::size_t> batch_size;
  std::optional<double> lr;
  std::optional<int> pretrain_epochs;
  std::optional<int> joint_epochs;
  std::optional<double> alpha;
  std::optional<double> beta;
};

int cmd_train(const Common& c, const TrainArgs& a) {
  if (c.out.empty()) throw UsageError("train needs --out <directory>");
  RunConfig cfg = c.config.empty() ? RunConfig{} : RunConfig::load(c.config);
  if (!a.arch.empty()) cfg.arch = parse_variant(a.arch);
  if (c.seed) cfg.seed = *c.seed;
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.k) cfg.k = *a.k;
  if (a.batch_size) cfg.batch_size = *a.batch_size;
  if (a.lr) cfg.learning_rate = *a.lr;
  if (a.pretrain_epochs) cfg.pretrain_epochs = *a.pretrain_epochs;
  if (a.joint_epochs) cfg.joint_epochs = *a.joint_epochs;
  if (a.alpha) cfg.alpha = *a.alpha;
  if (a.beta) cfg.beta = *a.beta;
  const nlohmann::json echo = cfg.to_json();

  const Dataset raw = load_any(a.data);
  raw.validate();
  if (raw.size() < static_cast<std::size_t>(cfg.k)) {
    throw InsufficientDataError("dataset has " + std::to_string(raw.size()) + " sweeps, fewer than K=" +
                                std::to_string(cfg.k));
  }
  const Dataset ds = normalize_dataset(raw);
  progress(c, "training " + std::string(to_string(cfg.arch)) + " on " + std::to_string(ds.size()) + " sweeps");

  auto on_epoch = [&](const EpochRecord& r) {
    char line[160];
    std::snprintf(line, sizeof line, "[%s %d] loss %.5f inertia %.3f (%.1fs)", r.phase.c_str(), r.epoch, r.loss,
                  r.inertia, r.seconds);
    progress(c, line);
  };
  TrainReport report;
  if (cfg.arch == Variant::Ssdc) {
    TrainConfig tc = cfg.ssdc_config();
    tc.on_epoch = on_epoch;
    report = train_ssdc(ds, tc);
  } else {
    AeConfig ac = cfg.ae_config();
    ac.on_epoch = on_epoch;
    report = train_ae(ds, ac);
  }

  fs::create_directories(c.out);
  const ModelArtifact artifact = make_artifact(report, ds, cfg.seed, echo);
  save_artifact(artifact, fs::path(c.out) / "model.json");
  nlohmann::json run = train_report_to_json(report, echo);
  if (ds.labeled()) {
    const std::vector<int> truth = ds.labels();
    const Eigen::MatrixXd points = project_dataset(report.model, ds);
    run["metrics"] = evaluate(points, report.final_labels, cfg.k, &truth, ds.class_names, {10000, cfg.seed}).to_json();
    run["metrics"]["variant"] = std::string(to_string(cfg.arch));
    if (cfg.arch == Variant::Aeml) run["metrics"]["note"] = "aeml clustering loss is a surrogate";
  }
  write_json(fs::path(c.out) / "report.json", run);
  write_json(fs::path(c.out) / "config.json", echo);
  progress(c, "wrote " + (fs::path(c.out) / "model.json").string());
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string model;
  std::string data;
};

int cmd_eval(const Common& c, const EvalArgs& a) {
  if (c.out.empty()) throw UsageError("eval needs --out <report file>");
  const ModelArtifact artifact = load_artifact(a.model);
  const TrainedModel& m = artifact.model;
  Dataset raw = load_any(a.data);
  raw.validate();
  const Dataset ds = apply_normalization(raw, *m.norm_stats);
  const Eigen::MatrixXd points = project_dataset(m, ds);
  const std::vector<int> clusters = kmeans_assign(m.clusters, points);
  std::optional<std::vector<int>> truth;
  if (ds.labeled()) truth = ds.labels();
  MetricsReport r = evaluate(points, clusters, m.clusters.k(), truth ? &*truth : nullptr, ds.class_names,
                             {10000, c.seed.value_or(artifact.meta.seed)});
  r.variant = std::string(to_string(m.variant));
  r.surrogate_loss = m.variant == Variant::Aeml;
  nlohmann::json doc = r.to_json();
  doc["inertia"] = kmeans_objective(points, clusters, m.clusters.centroids);
  write_json(c.out, doc);
  progress(c, "wrote " + c.out);
  return 0;
}

// ---------------------------------------------------------------- serve

struct ServeArgs {
  std::string model;
  std::string labels;
  std::string host = "127.0.0.1";
  int port = 8080;
  bool cors = false;
};

int cmd_serve(const Common& c, const ServeArgs& a) {
  const fs::path labels = a.labels.empty() ? fs::path(a.model).replace_extension(".labels.json") : fs::path(a.labels);
  Service service(load_artifact(a.model), labels, a.cors);
  std::signal(SIGTERM, on_signal);
  std::signal(SIGINT, on_signal);
  std::thread watcher([&service] {
    while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    service.stop();
  });
  progress(c, "serving on " + a.host + ":" + std::to_string(a.port) + " (labels: " + labels.string() + ")");
  try {
    service.listen(a.host, a.port);
  } catch (...) {
    g_stop.store(true);
    watcher.join();
    throw;
  }
  g_stop.store(true);
  watcher.join();
  progress(c, "stopped");
  return 0;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "RNG seed");
  sub->add_option("--config", c.config, "JSON config document");
  sub->add_option("--out", c.out, "output path");
  sub->add_flag("--quiet", c.quiet, "suppress progress output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"label-free RAT clustering: generate, train, evaluate, serve"};
  app.require_subcommand(1);

  Common common;
  GenArgs gen;
  TrainArgs train;
  EvalArgs eval;
  ServeArgs serve;

  auto* g = app.add_subcommand("gen", "generate a synthetic labeled dataset");
  add_common(g, common);
  g->add_option("--classes", gen.classes, "number of built-in classes (1-5)");
  g->add_option("--n", gen.n, "sweeps per class");
  g->add_option("--profile", gen.profile, "JSON synthetic profile");
  g->add_option("--format", gen.format, "csv or bin (default: from --out extension)");

  auto* t = app.add_subcommand("train", "train ssdc, aeml or dcec");
  add_common(t, common);
  t->add_option("--arch", train.arch, "ssdc | aeml | dcec");
  t->add_option("--data", train.data, "dataset file")->required();
  t->add_option("--epochs", train.epochs, "ssdc rounds");
  t->add_option("--k", train.k, "number of clusters");
  t->add_option("--batch-size", train.batch_size, "minibatch size");
  t->add_option("--lr", train.lr, "Adam learning rate");
  t->add_option("--pretrain-epochs", train.pretrain_epochs, "autoencoder pretraining epochs");
  t->add_option("--joint-epochs", train.joint_epochs, "autoencoder joint epochs");
  t->add_option("--alpha", train.alpha, "reconstruction weight");
  t->add_option("--beta", train.beta, "clustering weight");

  auto* e = app.add_subcommand("eval", "evaluate a model on a dataset");
  add_common(e, common);
  e->add_option("--model", eval.model, "model artifact")->required();
  e->add_option("--data", eval.data, "dataset file")->required();

  auto* s = app.add_subcommand("serve", "serve the /v1 HTTP API");
  add_common(s, common);
  s->add_option("--model", serve.model, "model artifact")->required();
  s->add_option("--labels", serve.labels, "label map file (default: <model>.labels.json)");
  s->add_option("--host", serve.host, "bind address");
  s->add_option("--port", serve.port, "TCP port");
  s->add_flag("--cors", serve.cors, "send permissive CORS headers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (g->parsed()) return cmd_gen(common, gen);
    if (t->parsed()) return cmd_train(common, train);
    if (e->parsed()) return cmd_eval(common, eval);
    if (s->parsed()) return cmd_serve(common, serve);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << '\n';
    return 2;
  } catch (const ConfigError& err) {
    std::cerr << "usage error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 2;
}
