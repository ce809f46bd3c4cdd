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

#include "rfclust/model.hpp"

#include <algorithm>
#include <numeric>

#include "rfclust/autoencoder.hpp"
#include "rfclust/errors.hpp"
#include "rfclust/nn/loss.hpp"

namespace rfclust {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Ssdc: return "ssdc";
    case Variant::Aeml: return "aeml";
    case Variant::Dcec: return "dcec";
  }
  return "ssdc";
}

Variant parse_variant(std::string_view name) {
  if (name == "ssdc") return Variant::Ssdc;
  if (name == "aeml") return Variant::Aeml;
  if (name == "dcec") return Variant::Dcec;
  throw UsageError("unknown architecture '" + std::string(name) + "' (expected ssdc, aeml or dcec)");
}

nn::Tensor<float> make_batch(const RowMatrixF& bins, std::span<const std::size_t> rows) {
  const auto len = bins.cols();
  nn::Tensor<float> x(static_cast<Eigen::Index>(rows.size()), 1, len);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.data.row(0).segment(static_cast<Eigen::Index>(i) * len, len) = bins.row(static_cast<Eigen::Index>(rows[i]));
  }
  return x;
}

Eigen::MatrixXd forward_rows(const Model& net, const RowMatrixF& bins, std::size_t end, std::size_t chunk) {
  const auto n = static_cast<std::size_t>(bins.rows());
  Eigen::MatrixXd out;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < n; start += chunk) {
    rows.resize(std::min(chunk, n - start));
    std::iota(rows.begin(), rows.end(), start);
    const nn::Tensor<float> y = net.infer(make_batch(bins, rows), 0, end);
    if (out.size() == 0) out.resize(static_cast<Eigen::Index>(n), y.channels * y.length);
    // Features of sample b are column b of the (features x batch) output.
    if (y.length == 1) {
      out.middleRows(static_cast<Eigen::Index>(start), y.batch) = y.data.transpose().cast<double>();
    } else {
      for (Eigen::Index b = 0; b < y.batch; ++b) {
        for (Eigen::Index c = 0; c < y.channels; ++c) {
          for (Eigen::Index l = 0; l < y.length; ++l) {
            out(static_cast<Eigen::Index>(start) + b, c * y.length + l) = y(b, c, l);
          }
        }
      }
    }
  }
  return out;
}

Eigen::MatrixXd embed_dataset(const Model& net, const Dataset& ds) {
  if (!ds.norm_stats) throw ContractError("embedding requires a normalized dataset");
  return forward_rows(net, ds.matrix(), net.embedding_end);
}

Eigen::MatrixXd project_dataset(const TrainedModel& model, const Dataset& ds) {
  return pca_transform(model.clusters.pca, embed_dataset(model.network, ds));
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
  if (batch_size < 2) throw ConfigError("batch size must be at least 2");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    if (end - start == 1 && !batches.empty()) {
      batches.back().push_back(order[start]);
    } else {
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return batches;
}

void check_trained_model(const TrainedModel& model) {
  if (!model.norm_stats) throw IntegrityError("model carries no normalization statistics");
  if (!(model.norm_stats->std > 0.0)) throw IntegrityError("normalization std must be positive");
  const auto& cm = model.clusters;
  if (cm.centroids.size() == 0) throw IntegrityError("model carries no cluster centroids");
  if (cm.pca.components.size() == 0) throw IntegrityError("model carries no PCA basis");
  if (!cm.centroids.allFinite()) throw IntegrityError("centroids contain non-finite values");
  if (cm.pca.output_dim() != cm.dim()) throw IntegrityError("PCA output dimension does not match centroids");
  const auto& net = model.network;
  if (net.layers.empty() || net.embedding_end == 0 || net.embedding_end > net.layers.size()) {
    throw IntegrityError("network layer list is incomplete");
  }
  nn::Shape shape = nn::kInputShape;
  for (std::size_t i = 0; i < net.embedding_end; ++i) shape = net.layers[i].spec.output_shape(shape);
  if (shape.size() != cm.pca.input_dim()) {
    throw IntegrityError("PCA input dimension " + std::to_string(cm.pca.input_dim()) + " does not match the " +
                         std::to_string(shape.size()) + "-d embedding");
  }
  if (net.num_clusters != cm.k()) throw IntegrityError("network K does not match the number of centroids");
}

Prediction predict(const TrainedModel& model, const LabelMap& labels, const SweepVector& sweep) {
  check_trained_model(model);
  if (sweep.size() != kNumBins) {
    throw ValidationError("sweep must have 1024 bins, got " + std::to_string(sweep.size()));
  }
  if (!sweep.allFinite()) throw ValidationError("sweep contains non-finite values");
  const NormStats st = *model.norm_stats;
  RowMatrixF row(1, kNumBins);
  row.row(0) = ((sweep.cast<double>().array() - st.mean) / st.std).cast<float>().transpose();
  const std::size_t rows[] = {0};

  const Model& net = model.network;
  const nn::Tensor<float> emb = net.infer(make_batch(row, rows), 0, net.embedding_end);
  Eigen::MatrixXd flat(1, emb.channels * emb.length);
  for (Eigen::Index c = 0; c < emb.channels; ++c) {
    for (Eigen::Index l = 0; l < emb.length; ++l) flat(0, c * emb.length + l) = emb(0, c, l);
  }
  const Eigen::MatrixXd z = pca_transform(model.clusters.pca, flat);

  Prediction p;
  p.cluster_id = kmeans_assign(model.clusters, z).front();
  p.label = labels.label(p.cluster_id);
  p.embedding = z.row(0).transpose();
  if (model.variant == Variant::Ssdc) {
    const nn::Tensor<float> logits = net.infer(emb, net.embedding_end, net.size());
    p.confidence = nn::softmax_probabilities(logits).row(0).maxCoeff();
  } else {
    p.confidence = dcec_soft_assign(z, model.clusters.centroids).row(0).maxCoeff();
  }
  return p;
}

}  // namespace rfclust
