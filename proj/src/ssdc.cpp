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

#include "rfclust/ssdc.hpp"

#include <chrono>
#include <cmath>

#include "rfclust/errors.hpp"
#include "rfclust/nn/loss.hpp"

namespace rfclust {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (num_clusters < 2) throw ConfigError("K must be at least 2");
  if (embed_dim < 1 || embed_dim > 512) throw ConfigError("embedding dimension must lie in [1, 512]");
  if (batch_size < 2) throw ConfigError("batch size must be at least 2");
  adam.validate();
}

Model build_ssdc(int num_clusters, std::uint64_t seed) { return nn::make_ssdc<float>(num_clusters, seed); }

Eigen::MatrixXd embed_batch(const Model& net, const Dataset& ds) {
  if (!ds.norm_stats) throw ContractError("embed_batch requires sweeps normalized with the model statistics");
  return forward_rows(net, ds.matrix(), net.encoder_end);
}

ClusteringRound clustering_round(const Model& net, const Dataset& ds, const TrainConfig& cfg, int round,
                                 const PcaBasis* previous_pca) {
  if (ds.size() < static_cast<std::size_t>(cfg.num_clusters)) {
    throw InsufficientDataError("dataset has " + std::to_string(ds.size()) + " sweeps, fewer than K=" +
                                std::to_string(cfg.num_clusters));
  }
  const Eigen::MatrixXd embeddings = embed_dataset(net, ds);
  ClusteringRound out;
  out.model.pca = (cfg.refit_pca_each_round || previous_pca == nullptr)
                      ? pca_fit(embeddings, std::min<Eigen::Index>(cfg.embed_dim, embeddings.cols()))
                      : *previous_pca;
  const Eigen::MatrixXd reduced = pca_transform(out.model.pca, embeddings);
  PcaBasis pca = std::move(out.model.pca);
  out.model = kmeans_fit(reduced, cfg.num_clusters, cfg.seed ^ (0x5eedULL + static_cast<std::uint64_t>(round)),
                         cfg.kmeans);
  out.model.pca = std::move(pca);
  out.labels = kmeans_assign(out.model, reduced);
  return out;
}

LearningRound learning_round(Model& net, const Dataset& ds, std::span<const int> pseudo_labels,
                             const TrainConfig& cfg, int round) {
  if (pseudo_labels.size() != ds.size()) throw ShapeError("pseudo-labels do not align with the dataset");
  if (!ds.norm_stats) throw ContractError("training requires a normalized dataset");
  const std::size_t head = net.size() - 1;
  if (cfg.reinit_head_each_round) {
    Rng rng = Rng::derive(cfg.seed, "head", static_cast<std::uint64_t>(round));
    Model::init_layer(net.layers[head], rng);
  }
  if (cfg.reset_bn_stats_each_round) {
    for (auto& l : net.layers) {
      if (l.spec.kind == nn::LayerKind::BatchNorm1d) {
        l.running_mean.setZero();
        l.running_var.setOnes();
      }
    }
  }

  const RowMatrixF bins = ds.matrix();
  Rng shuffle = Rng::derive(cfg.seed, "shuffle", static_cast<std::uint64_t>(round));
  const auto batches = make_batches(ds.size(), cfg.batch_size, shuffle);

  LearningRound out;
  std::vector<nn::LayerCache<float>> caches;
  std::vector<int> targets;
  double weighted = 0.0;
  for (const auto& batch : batches) {
    targets.clear();
    for (std::size_t i : batch) targets.push_back(pseudo_labels[i]);
    const nn::Tensor<float> logits = net.forward(make_batch(bins, batch), nn::Mode::Train, &caches);
    const auto ce = nn::softmax_cross_entropy(logits, targets);
    if (!std::isfinite(ce.loss)) {
      throw NumericError("round " + std::to_string(round) + ": non-finite cross-entropy after " +
                         std::to_string(out.batch_losses.size()) + " batches");
    }
    net.backward(caches, ce.grad, 0, net.size());
    nn::adam_step(net, cfg.adam);
    out.batch_losses.push_back(ce.loss);
    weighted += ce.loss * static_cast<double>(batch.size());
  }
  out.mean_loss = weighted / static_cast<double>(ds.size());
  return out;
}

TrainReport train_ssdc(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  if (!ds.norm_stats) throw ContractError("train_ssdc requires a normalized dataset");
  const auto t_start = std::chrono::steady_clock::now();

  TrainReport report;
  report.variant = Variant::Ssdc;
  Model net = build_ssdc(cfg.num_clusters, cfg.seed);
  std::optional<PcaBasis> pca;
  for (int round = 0; round < cfg.epochs; ++round) {
    const auto t0 = std::chrono::steady_clock::now();
    ClusteringRound cr = clustering_round(net, ds, cfg, round, pca ? &*pca : nullptr);
    pca = cr.model.pca;
    const LearningRound lr = learning_round(net, ds, cr.labels, cfg, round);

    EpochRecord rec;
    rec.epoch = round;
    rec.phase = "ssdc";
    rec.inertia = cr.model.inertia;
    rec.loss = lr.mean_loss;
    rec.cluster_loss = lr.mean_loss;
    rec.batch_losses = lr.batch_losses;
    rec.cluster_sizes = cluster_sizes(cr.labels, cfg.num_clusters);
    rec.seconds = seconds_since(t0);
    if (cfg.on_epoch) cfg.on_epoch(rec);
    report.epochs.push_back(std::move(rec));
  }

  ClusteringRound final_round = clustering_round(net, ds, cfg, cfg.epochs, pca ? &*pca : nullptr);
  report.final_labels = std::move(final_round.labels);
  report.model.variant = Variant::Ssdc;
  report.model.network = std::move(net);
  report.model.norm_stats = ds.norm_stats;
  report.model.clusters = std::move(final_round.model);
  report.seconds = seconds_since(t_start);
  return report;
}

}  // namespace rfclust
