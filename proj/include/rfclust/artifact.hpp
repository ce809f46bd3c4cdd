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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rfclust/metrics.hpp"
#include "rfclust/model.hpp"

namespace rfclust {

inline constexpr int kArtifactFormatVersion = 1;

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws ParseError on characters outside the standard alphabet or bad
/// padding.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Training-set cluster statistics served by GET /v1/clusters.
struct ClusterStats {
  std::vector<std::size_t> counts;
  std::vector<std::optional<Eigen::VectorXd>> averages_db;
};

struct ArtifactMetadata {
  std::uint64_t seed = 0;
  int epochs = 0;
  std::size_t train_size = 0;
  std::string dataset_fingerprint;  // 16 hex digits
  std::string trained_at;
  nlohmann::json config = nlohmann::json::object();
};

/// Immutable, self-contained trained model: layer list, float32 weights and
/// batchnorm running statistics, normalization, PCA and centroids.
struct ModelArtifact {
  TrainedModel model;
  ArtifactMetadata meta;
  ClusterStats stats;
};

/// Artifact from a finished training run; computes the cluster statistics
/// on `train` (normalized) under the final cluster model.
ModelArtifact make_artifact(const TrainReport& report, const Dataset& train, std::uint64_t seed,
                            const nlohmann::json& config = nlohmann::json::object());

nlohmann::json artifact_to_json(const ModelArtifact& artifact);
/// Rebuilds and verifies an artifact. Throws IntegrityError when the stored
/// parameter count, shapes, blob sizes or cluster dimensions disagree.
ModelArtifact artifact_from_json(const nlohmann::json& doc);

/// Written atomically (temporary sibling + rename).
void save_artifact(const ModelArtifact& artifact, const std::filesystem::path& path);
ModelArtifact load_artifact(const std::filesystem::path& path);

/// Run report document: per-epoch records, timing and effective config.
nlohmann::json train_report_to_json(const TrainReport& report, const nlohmann::json& config);

}  // namespace rfclust
