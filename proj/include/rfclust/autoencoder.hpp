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
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rfclust/model.hpp"
#include "rfclust/nn/adam.hpp"

namespace rfclust {

/// Autoencoder baselines. Both pretrain on reconstruction MSE and then train
/// jointly on alpha * MSE + beta * cluster loss, where the cluster loss is
/// the KL soft-assignment loss (dcec) or a centroid pull / hinge push
/// surrogate on relative distances (aeml).
struct AeConfig {
  Variant variant = Variant::Dcec;
  int pretrain_epochs = 200;
  int joint_epochs = 50;
  std::size_t batch_size = 256;
  int num_clusters = 10;
  int embed_dim = 10;
  double alpha = 1.0;
  double beta = 1.0;
  double margin = 1.0;
  /// Refresh the dcec target P for every minibatch instead of every epoch.
  bool target_per_batch = false;
  nn::AdamConfig adam;
  std::uint64_t seed = 0;
  KMeansOptions kmeans;
  std::function<void(const EpochRecord&)> on_epoch;

  void validate() const;
};

Model build_ae(std::uint64_t seed, int num_clusters = 10, int embed_dim = 10);

/// Shuffled minibatch MSE training for `epochs` epochs. Epoch e uses the
/// shuffle stream keyed by first_epoch + e, so a run can be continued.
std::vector<EpochRecord> pretrain_ae(Model& net, const Dataset& ds, const AeConfig& cfg, int epochs,
                                     int first_epoch = 0);

/// Student-t (one degree of freedom) soft assignment, rows sum to one.
Eigen::MatrixXd dcec_soft_assign(const Eigen::MatrixXd& z, const Eigen::MatrixXd& centers);

/// Sharpened target p_ik proportional to q_ik^2 / f_k, f_k = sum_i q_ik.
/// Columns with f_k = 0 are dropped (their p is 0) and listed in
/// `degenerate` when given.
Eigen::MatrixXd dcec_target(const Eigen::MatrixXd& q, std::vector<int>* degenerate = nullptr);

struct KlResult {
  double loss = 0.0;
  Eigen::MatrixXd grad_q;  // -P / Q, Q clamped at kKlEps
};

inline constexpr double kKlEps = 1e-12;

/// sum_i sum_k p_ik log(p_ik / q_ik); terms with p_ik = 0 contribute 0.
KlResult kl_cluster_loss(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q);

struct ClusterGradients {
  double loss = 0.0;
  Eigen::MatrixXd grad_z;        // n x d
  Eigen::MatrixXd grad_centers;  // K x d
};

/// KL(P || Q(z, centers)) with P held fixed, and its gradients with respect
/// to the embeddings and the centers.
ClusterGradients dcec_cluster_loss(const Eigen::MatrixXd& z, const Eigen::MatrixXd& centers,
                                   const Eigen::MatrixXd& p);

/// mean_i ||z_i - mu_a(i)||^2 + max(0, margin - min_{k != a(i)} ||z_i - mu_k||)^2.
/// Throws ConfigError when K < 2.
ClusterGradients aeml_cluster_loss(const Eigen::MatrixXd& z, std::span<const int> assignments,
                                   const Eigen::MatrixXd& centers, double margin);

/// Joint training of a pretrained autoencoder for cfg.joint_epochs epochs.
/// Shuffle streams continue after cfg.pretrain_epochs so that beta = 0
/// reproduces plain continued pretraining. The returned model carries a
/// ClusterModel fitted on the final embeddings.
TrainReport joint_train(Model net, const Dataset& ds, const AeConfig& cfg);

/// build_ae + pretrain_ae + joint_train; the report lists both phases.
TrainReport train_ae(const Dataset& ds, const AeConfig& cfg);

/// PCA (embedding -> embed_dim) and K-means on the current embeddings.
ClusterModel fit_final_clusters(const Model& net, const Dataset& ds, int num_clusters, int embed_dim,
                                std::uint64_t seed, const KMeansOptions& opts);

}  // namespace rfclust
