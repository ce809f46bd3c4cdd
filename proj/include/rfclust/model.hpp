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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rfclust/clustering.hpp"
#include "rfclust/label_map.hpp"
#include "rfclust/nn/network.hpp"
#include "rfclust/sweep.hpp"

namespace rfclust {

using Model = nn::Network<float>;
using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Which training procedure produced a model.
enum class Variant { Ssdc, Aeml, Dcec };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);  // throws UsageError

/// Everything needed to map a raw sweep to a cluster: the network, the
/// normalization it was trained with and the fitted PCA + K-means model.
struct TrainedModel {
  Variant variant = Variant::Ssdc;
  Model network;
  std::optional<NormStats> norm_stats;
  ClusterModel clusters;
};

/// (batch, 1, 1024) tensor from selected rows of a (n x 1024) matrix.
nn::Tensor<float> make_batch(const RowMatrixF& bins, std::span<const std::size_t> rows);

/// Eval-mode forward through layers [0, end) for every row, in chunks of
/// `chunk` sweeps. Rows of the result are the flattened outputs.
Eigen::MatrixXd forward_rows(const Model& net, const RowMatrixF& bins, std::size_t end, std::size_t chunk = 256);

/// Embeddings that the clustering sees: 512-d encoder output for SSDC, the
/// 10-d bottleneck for autoencoders. Requires a normalized dataset.
Eigen::MatrixXd embed_dataset(const Model& net, const Dataset& ds);

/// embed_dataset followed by the model's PCA projection.
Eigen::MatrixXd project_dataset(const TrainedModel& model, const Dataset& ds);

/// Shuffled minibatches; a trailing batch of one sweep is merged into the
/// previous batch so batchnorm always sees at least two samples.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng);

struct Prediction {
  int cluster_id = 0;
  std::string label;
  double confidence = 0.0;
  Eigen::VectorXd embedding;  // PCA coordinates
};

/// raw dB sweep -> normalize -> encoder -> PCA -> nearest centroid -> label.
/// Confidence is the max softmax of the K-way head for SSDC and the max
/// Student-t soft assignment to the centroids for autoencoders.
Prediction predict(const TrainedModel& model, const LabelMap& labels, const SweepVector& sweep);

/// Integrity checks shared by artifact loading and predict.
void check_trained_model(const TrainedModel& model);

struct EpochRecord {
  int epoch = 0;
  std::string phase;                 // "ssdc", "pretrain", "joint"
  double inertia = 0.0;              // clustering objective, when clustering ran
  double loss = 0.0;                 // epoch-mean total loss
  double recon_loss = 0.0;
  double cluster_loss = 0.0;
  std::vector<double> batch_losses;
  std::vector<std::size_t> cluster_sizes;
  double seconds = 0.0;
};

struct TrainReport {
  Variant variant = Variant::Ssdc;
  std::vector<EpochRecord> epochs;
  TrainedModel model;
  /// Training-set assignment under the final cluster model.
  std::vector<int> final_labels;
  double seconds = 0.0;
};

}  // namespace rfclust
