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
#include <vector>

#include <Eigen/Dense>

namespace rfclust {

/// Principal directions of a set of vectors.
struct PcaBasis {
  Eigen::VectorXd mean;                 // input dimension
  Eigen::MatrixXd components;           // d_out x input dim, orthonormal rows
  Eigen::VectorXd explained_variance;   // d_out, descending
  double total_variance = 0.0;

  [[nodiscard]] Eigen::Index input_dim() const { return mean.size(); }
  [[nodiscard]] Eigen::Index output_dim() const { return components.rows(); }
  [[nodiscard]] Eigen::VectorXd explained_variance_ratio() const {
    return total_variance > 0.0 ? Eigen::VectorXd(explained_variance / total_variance)
                                : Eigen::VectorXd::Zero(explained_variance.size());
  }
};

/// Fits the top `d_out` principal directions of the rows of `vectors`
/// (eigen-decomposition of the sample covariance). Each component is signed
/// so its largest-magnitude coordinate is positive. Throws
/// RankDeficiencyError when fewer than d_out directions carry variance.
PcaBasis pca_fit(const Eigen::MatrixXd& vectors, Eigen::Index d_out);

/// (v - mean) * components^T, row-wise.
Eigen::MatrixXd pca_transform(const PcaBasis& basis, const Eigen::MatrixXd& vectors);

/// Maps projected coordinates back to the input space.
Eigen::MatrixXd pca_inverse_transform(const PcaBasis& basis, const Eigen::MatrixXd& projected);

struct KMeansOptions {
  double tolerance = 1e-4;  // max centroid shift
  int max_iterations = 300;
};

/// K-means partition of an embedded space, with the PCA basis that maps
/// encoder outputs into it.
struct ClusterModel {
  Eigen::MatrixXd centroids;  // K x d
  double inertia = 0.0;
  int iterations = 0;
  /// Objective after every assignment step, ending with the final inertia.
  std::vector<double> objective_history;
  PcaBasis pca;

  [[nodiscard]] int k() const { return static_cast<int>(centroids.rows()); }
  [[nodiscard]] Eigen::Index dim() const { return centroids.cols(); }
};

/// Lloyd iterations from k-means++ seeding. Empty clusters are re-seeded at
/// the point farthest from its centroid within the largest cluster.
ClusterModel kmeans_fit(const Eigen::MatrixXd& points, int k, std::uint64_t seed, const KMeansOptions& options = {});

/// Nearest centroid per row; ties go to the lowest cluster index.
std::vector<int> kmeans_assign(const ClusterModel& model, const Eigen::MatrixXd& points);
std::vector<int> nearest_centroid(const Eigen::MatrixXd& centroids, const Eigen::MatrixXd& points);

/// Within-cluster sum of squared distances for the given assignment.
double kmeans_objective(const Eigen::MatrixXd& points, const std::vector<int>& labels,
                        const Eigen::MatrixXd& centroids);

/// Number of points per cluster id in [0, k).
std::vector<std::size_t> cluster_sizes(const std::vector<int>& labels, int k);

}  // namespace rfclust
