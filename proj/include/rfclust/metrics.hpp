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
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rfclust/label_map.hpp"
#include "rfclust/sweep.hpp"

namespace rfclust {

/// Class x cluster co-occurrence counts. Label values are arbitrary ints,
/// compacted in ascending order.
struct ContingencyTable {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> class_totals;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> cluster_totals;
  std::int64_t n = 0;
};

ContingencyTable contingency(std::span<const int> classes, std::span<const int> clusters);

// Label-based scores; natural log throughout.
double nmi(std::span<const int> classes, std::span<const int> clusters);
double ari(std::span<const int> classes, std::span<const int> clusters);
double homogeneity(std::span<const int> classes, std::span<const int> clusters);
double completeness(std::span<const int> classes, std::span<const int> clusters);

/// Mean silhouette over a seeded subsample of at most `max_points` rows,
/// each scored against the full point set. Singleton members score 0.
/// Throws UndefinedMetricError with fewer than two clusters.
double silhouette(const Eigen::MatrixXd& points, std::span<const int> clusters, std::size_t max_points = 10000,
                  std::uint64_t seed = 0);

/// Davies-Bouldin index. Coincident centroids use a 1e-12 denominator and set
/// *degenerate.
double davies_bouldin(const Eigen::MatrixXd& points, std::span<const int> clusters, bool* degenerate = nullptr);

/// Reported instead of +inf when the within-cluster dispersion is zero.
inline constexpr double kCalinskiHarabaszCap = 1e12;

/// Calinski-Harabasz index. Throws UndefinedMetricError for k = 1 or k = n.
double calinski_harabasz(const Eigen::MatrixXd& points, std::span<const int> clusters, bool* capped = nullptr);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;              // true members
  std::int64_t predicted_positives = 0;  // TP + FP
  bool no_predictions = false;
};

/// One-vs-rest scores for classes 0..num_classes-1. Predictions outside that
/// range (e.g. unmapped clusters) count only as misses.
std::vector<ClassScores> per_class_prf(std::span<const int> classes, std::span<const int> predicted,
                                       int num_classes);

struct ClusterAverages {
  std::vector<std::size_t> counts;
  std::vector<std::optional<Eigen::VectorXd>> means;  // empty clusters have none
};

/// Per-cluster mean sweep in dB (normalized datasets are denormalized).
ClusterAverages cluster_averages(const Dataset& ds, std::span<const int> clusters, int k);

/// Plurality class per cluster, ties to the lowest class id; -1 when empty.
std::vector<int> dominant_classes(std::span<const int> classes, std::span<const int> clusters, int k,
                                  int num_classes);

/// dominant_classes rendered as a LabelMap with class names.
LabelMap dominant_label_map(std::span<const int> classes, std::span<const int> clusters,
                            const std::vector<std::string>& class_names, int k);

struct MetricsReport {
  std::string variant;
  bool surrogate_loss = false;
  std::size_t n = 0;
  int k = 0;
  std::vector<std::size_t> cluster_sizes;

  double silhouette = 0.0;
  std::size_t silhouette_sample_size = 0;
  std::uint64_t silhouette_seed = 0;
  double davies_bouldin = 0.0;
  bool davies_bouldin_degenerate = false;
  double calinski_harabasz = 0.0;
  bool calinski_harabasz_capped = false;

  bool labeled = false;
  double nmi = 0.0;
  double ari = 0.0;
  double homogeneity = 0.0;
  double completeness = 0.0;
  std::vector<std::string> class_names;
  std::vector<int> dominant_class;
  std::vector<ClassScores> per_class;

  [[nodiscard]] nlohmann::json to_json() const;
};

struct EvaluateOptions {
  std::size_t silhouette_max_points = 10000;
  std::uint64_t seed = 0;
};

/// Distance-based metrics on `points` (the clustered vectors) and, when
/// `classes` is given, the label-based metrics plus per-class scores under
/// the dominant-class mapping.
MetricsReport evaluate(const Eigen::MatrixXd& points, std::span<const int> clusters, int k,
                       const std::vector<int>* classes, const std::vector<std::string>& class_names,
                       const EvaluateOptions& opts = {});

}  // namespace rfclust
