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

#include "rfclust/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rfclust/errors.hpp"
#include "rfclust/rng.hpp"

namespace rfclust {

using Eigen::Index;

PcaBasis pca_fit(const Eigen::MatrixXd& vectors, Index d_out) {
  const Index n = vectors.rows();
  const Index dim = vectors.cols();
  if (d_out < 1 || d_out > dim) {
    throw PreconditionError("PCA output dimension " + std::to_string(d_out) + " outside [1, " + std::to_string(dim) +
                            "]");
  }
  if (n <= d_out) {
    throw InsufficientDataError("PCA needs more than " + std::to_string(d_out) + " vectors, got " + std::to_string(n));
  }
  PcaBasis basis;
  basis.mean = vectors.colwise().mean().transpose();
  const Eigen::MatrixXd centered = vectors.rowwise() - basis.mean.transpose();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / static_cast<double>(n - 1));
  cov = cov.selfadjointView<Eigen::Lower>();

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("PCA eigen-decomposition failed");
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const double top = std::max(values(dim - 1), 0.0);
  const double tol = std::max(top, 1.0) * 1e-12 * static_cast<double>(dim);
  Index rank = 0;
  for (Index i = 0; i < dim; ++i) rank += values(i) > tol ? 1 : 0;
  if (rank < d_out) {
    throw RankDeficiencyError("PCA: data rank " + std::to_string(rank) + " is below the requested " +
                              std::to_string(d_out) + " components");
  }

  basis.components.resize(d_out, dim);
  basis.explained_variance.resize(d_out);
  for (Index c = 0; c < d_out; ++c) {
    const Index src = dim - 1 - c;
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    basis.components.row(c) = v.transpose();
    basis.explained_variance(c) = values(src);
  }
  basis.total_variance = values.cwiseMax(0.0).sum();
  return basis;
}

Eigen::MatrixXd pca_transform(const PcaBasis& basis, const Eigen::MatrixXd& vectors) {
  if (vectors.cols() != basis.input_dim()) {
    throw ShapeError("PCA transform expects " + std::to_string(basis.input_dim()) + "-d vectors, got " +
                     std::to_string(vectors.cols()));
  }
  return (vectors.rowwise() - basis.mean.transpose()) * basis.components.transpose();
}

Eigen::MatrixXd pca_inverse_transform(const PcaBasis& basis, const Eigen::MatrixXd& projected) {
  if (projected.cols() != basis.output_dim()) throw ShapeError("PCA inverse transform: dimension mismatch");
  return (projected * basis.components).rowwise() + basis.mean.transpose();
}

std::vector<int> nearest_centroid(const Eigen::MatrixXd& centroids, const Eigen::MatrixXd& points) {
  if (points.cols() != centroids.cols()) {
    throw ShapeError("points are " + std::to_string(points.cols()) + "-d, centroids " +
                     std::to_string(centroids.cols()) + "-d");
  }
  std::vector<int> labels(static_cast<std::size_t>(points.rows()));
  for (Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Index j = 0; j < centroids.rows(); ++j) {
      const double d = (points.row(i) - centroids.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(j);
      }
    }
    labels[static_cast<std::size_t>(i)] = arg;
  }
  return labels;
}

std::vector<int> kmeans_assign(const ClusterModel& model, const Eigen::MatrixXd& points) {
  return nearest_centroid(model.centroids, points);
}

double kmeans_objective(const Eigen::MatrixXd& points, const std::vector<int>& labels,
                        const Eigen::MatrixXd& centroids) {
  double total = 0.0;
  for (Index i = 0; i < points.rows(); ++i) {
    total += (points.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return total;
}

std::vector<std::size_t> cluster_sizes(const std::vector<int>& labels, int k) {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int l : labels) {
    if (l < 0 || l >= k) throw IndexError("cluster id " + std::to_string(l) + " outside [0, " + std::to_string(k) + ")");
    ++sizes[static_cast<std::size_t>(l)];
  }
  return sizes;
}

namespace {

Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& points, int k, Rng& rng) {
  const Index n = points.rows();
  Eigen::MatrixXd centroids(k, points.cols());
  centroids.row(0) = points.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd d2(n);
  for (Index i = 0; i < n; ++i) d2(i) = (points.row(i) - centroids.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index pick = 0;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc > r && d2(i) > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centroids.row(c) = points.row(pick);
    for (Index i = 0; i < n; ++i) d2(i) = std::min(d2(i), (points.row(i) - centroids.row(c)).squaredNorm());
  }
  return centroids;
}

// Means of assigned points; empty clusters are re-seeded from the largest
// cluster's farthest member, which then moves to the re-seeded cluster.
void update_centroids(const Eigen::MatrixXd& points, std::vector<int>& labels, Eigen::MatrixXd& centroids) {
  const int k = static_cast<int>(centroids.rows());
  auto recompute = [&](int c) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(points.cols());
    std::size_t count = 0;
    for (Index i = 0; i < points.rows(); ++i) {
      if (labels[static_cast<std::size_t>(i)] == c) {
        sum += points.row(i);
        ++count;
      }
    }
    if (count > 0) centroids.row(c) = sum / static_cast<double>(count);
    return count;
  };
  std::vector<std::size_t> counts(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) counts[static_cast<std::size_t>(c)] = recompute(c);

  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) continue;
    const auto largest = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    if (counts[static_cast<std::size_t>(largest)] < 2) break;  // fewer distinct points than clusters
    Index far = -1;
    double far_d = -1.0;
    for (Index i = 0; i < points.rows(); ++i) {
      if (labels[static_cast<std::size_t>(i)] != largest) continue;
      const double d = (points.row(i) - centroids.row(largest)).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    centroids.row(c) = points.row(far);
    labels[static_cast<std::size_t>(far)] = c;
    counts[static_cast<std::size_t>(c)] = 1;
    counts[static_cast<std::size_t>(largest)] = recompute(largest);
  }
}

}  // namespace

ClusterModel kmeans_fit(const Eigen::MatrixXd& points, int k, std::uint64_t seed, const KMeansOptions& options) {
  if (k < 1) throw PreconditionError("K must be at least 1");
  if (points.rows() < k) {
    throw InsufficientDataError("K-means with K=" + std::to_string(k) + " needs at least K points, got " +
                                std::to_string(points.rows()));
  }
  if (!points.allFinite()) throw NumericError("K-means input contains non-finite values");
  Rng rng = Rng::derive(seed, "kmeans++");
  ClusterModel model;
  model.centroids = kmeans_plus_plus(points, k, rng);

  std::vector<int> labels;
  for (int it = 0; it < options.max_iterations; ++it) {
    labels = nearest_centroid(model.centroids, points);
    model.objective_history.push_back(kmeans_objective(points, labels, model.centroids));
    const Eigen::MatrixXd previous = model.centroids;
    update_centroids(points, labels, model.centroids);
    model.iterations = it + 1;
    const double shift = (model.centroids - previous).rowwise().norm().maxCoeff();
    if (shift < options.tolerance) break;
  }
  labels = nearest_centroid(model.centroids, points);
  model.inertia = kmeans_objective(points, labels, model.centroids);
  model.objective_history.push_back(model.inertia);
  return model;
}

}  // namespace rfclust
