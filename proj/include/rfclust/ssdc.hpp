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

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rfclust/model.hpp"
#include "rfclust/nn/adam.hpp"

namespace rfclust {

/// Self-supervised deep clustering: each round embeds the dataset, clusters
/// the PCA-reduced embeddings with K-means, then trains the network for one
/// epoch on the resulting pseudo-labels with cross-entropy.
struct TrainConfig {
  int epochs = 250;
  std::size_t batch_size = 256;
  int num_clusters = 10;
  int embed_dim = 10;
  nn::AdamConfig adam;
  std::uint64_t seed = 0;
  bool reinit_head_each_round = true;
  bool refit_pca_each_round = true;
  bool reset_bn_stats_each_round = false;
  KMeansOptions kmeans;
  /// Called after every epoch (progress reporting).
  std::function<void(const EpochRecord&)> on_epoch;

  void validate() const;
};

/// Initialized SSDC network (encoder + 512-100-K head).
Model build_ssdc(int num_clusters, std::uint64_t seed);

/// (n x 512) eval-mode encoder output; requires normalized sweeps.
Eigen::MatrixXd embed_batch(const Model& net, const Dataset& ds);

struct ClusteringRound {
  std::vector<int> labels;
  ClusterModel model;
};

/// Embed -> PCA (refit, or reuse `previous_pca` when refitting is off) ->
/// K-means. `round` keys the K-means seed.
ClusteringRound clustering_round(const Model& net, const Dataset& ds, const TrainConfig& cfg, int round,
                                 const PcaBasis* previous_pca = nullptr);

struct LearningRound {
  double mean_loss = 0.0;
  std::vector<double> batch_losses;
};

/// One shuffled epoch of minibatch cross-entropy on the pseudo-labels, with
/// Adam. Re-initializes the K-way output layer first when configured.
LearningRound learning_round(Model& net, const Dataset& ds, std::span<const int> pseudo_labels,
                             const TrainConfig& cfg, int round);

/// Alternates clustering_round and learning_round for cfg.epochs rounds from
/// a fresh build_ssdc, then clusters the final embeddings once more so the
/// returned ClusterModel matches the returned weights.
TrainReport train_ssdc(const Dataset& ds, const TrainConfig& cfg);

}  // namespace rfclust
