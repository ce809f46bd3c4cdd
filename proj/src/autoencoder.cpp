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

#include "rfclust/autoencoder.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "rfclust/errors.hpp"
#include "rfclust/nn/loss.hpp"

namespace rfclust {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

// (features x batch) float tensor <-> (batch x features) double matrix.
Eigen::MatrixXd to_rows(const nn::Tensor<float>& t) { return t.data.transpose().cast<double>(); }

std::uint64_t kmeans_seed(std::uint64_t seed, std::string_view tag, int epoch) {
  return Rng::derive(seed, tag, static_cast<std::uint64_t>(epoch)).next();
}

}  // namespace

void AeConfig::validate() const {
  if (pretrain_epochs < 0 || joint_epochs < 0) throw ConfigError("epoch counts must be >= 0");
  if (num_clusters < 2) throw ConfigError("K must be at least 2");
  if (embed_dim < 1) throw ConfigError("embedding dimension must be at least 1");
  if (batch_size < 2) throw ConfigError("batch size must be at least 2");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("alpha and beta must be >= 0");
  if (!(margin >= 0.0)) throw ConfigError("margin must be >= 0");
  if (variant == Variant::Ssdc) throw ConfigError("autoencoder training needs variant aeml or dcec");
  adam.validate();
}

Model build_ae(std::uint64_t seed, int num_clusters, int embed_dim) {
  return nn::make_ae<float>(num_clusters, seed, embed_dim);
}

std::vector<EpochRecord> pretrain_ae(Model& net, const Dataset& ds, const AeConfig& cfg, int epochs,
                                     int first_epoch) {
  if (!ds.norm_stats) throw ContractError("pretraining requires a normalized dataset");
  const RowMatrixF bins = ds.matrix();
  std::vector<EpochRecord> records;
  std::vector<nn::LayerCache<float>> caches;
  for (int e = 0; e < epochs; ++e) {
    const auto t0 = Clock::now();
    Rng shuffle = Rng::derive(cfg.seed, "ae-shuffle", static_cast<std::uint64_t>(first_epoch + e));
    EpochRecord rec;
    rec.epoch = first_epoch + e;
    rec.phase = "pretrain";
    double weighted = 0.0;
    for (const auto& batch : make_batches(ds.size(), cfg.batch_size, shuffle)) {
      const nn::Tensor<float> x = make_batch(bins, batch);
      const nn::Tensor<float> x_hat = net.forward(x, nn::Mode::Train, &caches);
      const auto mse = nn::mse_loss(x, x_hat);
      if (!std::isfinite(mse.loss)) throw NumericError("epoch " + std::to_string(rec.epoch) + ": non-finite MSE");
      net.backward(caches, mse.grad, 0, net.size());
      nn::adam_step(net, cfg.adam);
      rec.batch_losses.push_back(mse.loss);
      weighted += mse.loss * static_cast<double>(batch.size());
    }
    rec.recon_loss = weighted / static_cast<double>(ds.size());
    rec.loss = rec.recon_loss;
    rec.seconds = seconds_since(t0);
    if (cfg.on_epoch) cfg.on_epoch(rec);
    records.push_back(std::move(rec));
  }
  return records;
}

Eigen::MatrixXd dcec_soft_assign(const Eigen::MatrixXd& z, const Eigen::MatrixXd& centers) {
  if (z.cols() != centers.cols()) throw ShapeError("embedding and center dimensions differ");
  Eigen::MatrixXd q(z.rows(), centers.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index k = 0; k < centers.rows(); ++k) {
      q(i, k) = 1.0 / (1.0 + (z.row(i) - centers.row(k)).squaredNorm());
    }
    q.row(i) /= q.row(i).sum();
  }
  return q;
}

Eigen::MatrixXd dcec_target(const Eigen::MatrixXd& q, std::vector<int>* degenerate) {
  const Eigen::RowVectorXd f = q.colwise().sum();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  if (degenerate) degenerate->clear();
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    if (f(k) > 0.0) {
      p.col(k) = q.col(k).array().square() / f(k);
    } else if (degenerate) {
      degenerate->push_back(static_cast<int>(k));
    }
  }
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double s = p.row(i).sum();
    if (s > 0.0) p.row(i) /= s;
  }
  return p;
}

KlResult kl_cluster_loss(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols()) throw ShapeError("P and Q shapes differ");
  KlResult r;
  r.grad_q.resize(q.rows(), q.cols());
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (Eigen::Index k = 0; k < q.cols(); ++k) {
      const double qk = std::max(q(i, k), kKlEps);
      const double pk = p(i, k);
      if (pk > 0.0) r.loss += pk * std::log(std::max(pk, kKlEps) / qk);
      r.grad_q(i, k) = -pk / qk;
    }
  }
  return r;
}

ClusterGradients dcec_cluster_loss(const Eigen::MatrixXd& z, const Eigen::MatrixXd& centers,
                                   const Eigen::MatrixXd& p) {
  const Eigen::MatrixXd q = dcec_soft_assign(z, centers);
  ClusterGradients g;
  g.loss = kl_cluster_loss(p, q).loss;
  g.grad_z = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  g.grad_centers = Eigen::MatrixXd::Zero(centers.rows(), centers.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index k = 0; k < centers.rows(); ++k) {
      const Eigen::RowVectorXd diff = z.row(i) - centers.row(k);
      const Eigen::RowVectorXd term = (2.0 * (p(i, k) - q(i, k)) / (1.0 + diff.squaredNorm())) * diff;
      g.grad_z.row(i) += term;
      g.grad_centers.row(k) -= term;
    }
  }
  return g;
}

ClusterGradients aeml_cluster_loss(const Eigen::MatrixXd& z, std::span<const int> assignments,
                                   const Eigen::MatrixXd& centers, double margin) {
  const Eigen::Index k = centers.rows();
  if (k < 2) throw ConfigError("aeml cluster loss needs K >= 2");
  if (z.cols() != centers.cols()) throw ShapeError("embedding and center dimensions differ");
  if (static_cast<Eigen::Index>(assignments.size()) != z.rows()) throw ShapeError("one assignment per row expected");
  ClusterGradients g;
  g.grad_z = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  g.grad_centers = Eigen::MatrixXd::Zero(k, z.cols());
  if (z.rows() == 0) return g;
  const double inv_n = 1.0 / static_cast<double>(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int a = assignments[static_cast<std::size_t>(i)];
    if (a < 0 || a >= k) throw IndexError("assignment " + std::to_string(a) + " outside [0, K)");
    const Eigen::RowVectorXd pull = z.row(i) - centers.row(a);
    g.loss += pull.squaredNorm() * inv_n;
    g.grad_z.row(i) += 2.0 * inv_n * pull;
    g.grad_centers.row(a) -= 2.0 * inv_n * pull;

    Eigen::Index other = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < k; ++j) {
      if (j == a) continue;
      const double d = (z.row(i) - centers.row(j)).norm();
      if (d < best) {
        best = d;
        other = j;
      }
    }
    const double gap = margin - best;
    if (gap > 0.0) {
      g.loss += gap * gap * inv_n;
      if (best > 0.0) {
        // d/dz (m - d)^2 = -2 (m - d) (z - mu) / d
        const Eigen::RowVectorXd dir = (z.row(i) - centers.row(other)) / best;
        g.grad_z.row(i) -= 2.0 * inv_n * gap * dir;
        g.grad_centers.row(other) += 2.0 * inv_n * gap * dir;
      }
    }
  }
  return g;
}

ClusterModel fit_final_clusters(const Model& net, const Dataset& ds, int num_clusters, int embed_dim,
                                std::uint64_t seed, const KMeansOptions& opts) {
  const Eigen::MatrixXd emb = embed_dataset(net, ds);
  PcaBasis pca = pca_fit(emb, std::min<Eigen::Index>(embed_dim, emb.cols()));
  ClusterModel cm = kmeans_fit(pca_transform(pca, emb), num_clusters, seed, opts);
  cm.pca = std::move(pca);
  return cm;
}

TrainReport joint_train(Model net, const Dataset& ds, const AeConfig& cfg) {
  cfg.validate();
  if (!ds.norm_stats) throw ContractError("joint training requires a normalized dataset");
  if (ds.size() < static_cast<std::size_t>(cfg.num_clusters)) {
    throw InsufficientDataError("dataset has fewer sweeps than K");
  }
  const auto t_start = Clock::now();
  const bool dcec = cfg.variant == Variant::Dcec;
  const std::size_t mid = net.embedding_end;
  const std::size_t end = net.size();
  const RowMatrixF bins = ds.matrix();

  TrainReport report;
  report.variant = cfg.variant;

  // Trainable dcec centers in the raw bottleneck space, from K-means on the
  // pretrained embeddings.
  nn::Param<double> centers;
  std::int64_t center_step = 0;
  {
    const Eigen::MatrixXd z0 = embed_dataset(net, ds);
    const ClusterModel init = kmeans_fit(z0, cfg.num_clusters, kmeans_seed(cfg.seed, "ae-centers", 0), cfg.kmeans);
    centers = nn::Param<double>(init.centroids.rows(), init.centroids.cols());
    centers.value = init.centroids;
  }

  std::vector<nn::LayerCache<float>> enc_caches;
  std::vector<nn::LayerCache<float>> dec_caches;
  for (int e = 0; e < cfg.joint_epochs; ++e) {
    const auto t0 = Clock::now();
    const int global_epoch = cfg.pretrain_epochs + e;
    const Eigen::MatrixXd z_all = embed_dataset(net, ds);
    Eigen::MatrixXd target;
    std::vector<int> assignments;
    EpochRecord rec;
    rec.epoch = global_epoch;
    rec.phase = "joint";
    if (dcec) {
      target = dcec_target(dcec_soft_assign(z_all, centers.value));
      rec.cluster_sizes = cluster_sizes(nearest_centroid(centers.value, z_all), cfg.num_clusters);
    } else {
      const ClusterModel km = kmeans_fit(z_all, cfg.num_clusters, kmeans_seed(cfg.seed, "ae-kmeans", e), cfg.kmeans);
      assignments = kmeans_assign(km, z_all);
      centers.value = km.centroids;
      rec.inertia = km.inertia;
      rec.cluster_sizes = cluster_sizes(assignments, cfg.num_clusters);
    }

    Rng shuffle = Rng::derive(cfg.seed, "ae-shuffle", static_cast<std::uint64_t>(global_epoch));
    double recon_sum = 0.0;
    double cluster_sum = 0.0;
    std::vector<int> batch_assign;
    for (const auto& batch : make_batches(ds.size(), cfg.batch_size, shuffle)) {
      const auto b = static_cast<double>(batch.size());
      const nn::Tensor<float> x = make_batch(bins, batch);
      const nn::Tensor<float> z = net.forward(x, nn::Mode::Train, 0, mid, &enc_caches);
      const nn::Tensor<float> x_hat = net.forward(z, nn::Mode::Train, mid, end, &dec_caches);
      auto mse = nn::mse_loss(x, x_hat);
      mse.grad.data *= static_cast<float>(cfg.alpha);
      nn::Tensor<float> grad_z = net.backward(dec_caches, mse.grad, mid, end);

      const Eigen::MatrixXd zb = to_rows(z);
      ClusterGradients cg;
      double scale = 1.0;
      if (dcec) {
        const Eigen::MatrixXd pb =
            cfg.target_per_batch ? dcec_target(dcec_soft_assign(zb, centers.value)) : rows_of(target, batch);
        cg = dcec_cluster_loss(zb, centers.value, pb);
        scale = 1.0 / b;  // batch mean of the per-sample KL
      } else {
        batch_assign.clear();
        for (std::size_t i : batch) batch_assign.push_back(assignments[i]);
        cg = aeml_cluster_loss(zb, batch_assign, centers.value, cfg.margin);
      }
      const double cluster_loss = cg.loss * scale;
      const double total = cfg.alpha * mse.loss + cfg.beta * cluster_loss;
      if (!std::isfinite(total)) throw NumericError("epoch " + std::to_string(global_epoch) + ": non-finite loss");

      grad_z.data += (cg.grad_z.transpose() * (cfg.beta * scale)).cast<float>();
      net.backward(enc_caches, grad_z, 0, mid);
      nn::adam_step(net, cfg.adam);
      if (dcec) {
        centers.grad = cg.grad_centers * (cfg.beta * scale);
        nn::adam_update(centers, ++center_step, cfg.adam);
      }

      rec.batch_losses.push_back(total);
      recon_sum += mse.loss * b;
      cluster_sum += cluster_loss * b;
    }
    const auto n = static_cast<double>(ds.size());
    rec.recon_loss = recon_sum / n;
    rec.cluster_loss = cluster_sum / n;
    rec.loss = cfg.alpha * rec.recon_loss + cfg.beta * rec.cluster_loss;
    rec.seconds = seconds_since(t0);
    if (cfg.on_epoch) cfg.on_epoch(rec);
    report.epochs.push_back(std::move(rec));
  }

  report.model.variant = cfg.variant;
  report.model.norm_stats = ds.norm_stats;
  report.model.clusters = fit_final_clusters(net, ds, cfg.num_clusters, cfg.embed_dim,
                                             kmeans_seed(cfg.seed, "ae-final", 0), cfg.kmeans);
  report.final_labels =
      kmeans_assign(report.model.clusters, pca_transform(report.model.clusters.pca, embed_dataset(net, ds)));
  report.model.network = std::move(net);
  report.seconds = seconds_since(t_start);
  return report;
}

TrainReport train_ae(const Dataset& ds, const AeConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  Model net = build_ae(cfg.seed, cfg.num_clusters, cfg.embed_dim);
  std::vector<EpochRecord> pre = pretrain_ae(net, ds, cfg, cfg.pretrain_epochs, 0);
  TrainReport report = joint_train(std::move(net), ds, cfg);
  pre.insert(pre.end(), std::make_move_iterator(report.epochs.begin()), std::make_move_iterator(report.epochs.end()));
  report.epochs = std::move(pre);
  report.seconds = seconds_since(t0);
  return report;
}

}  // namespace rfclust
