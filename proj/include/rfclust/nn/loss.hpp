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

#include <cmath>
#include <span>
#include <string>

#include "rfclust/nn/tensor.hpp"

namespace rfclust::nn {

template <class Scalar>
struct LossResult {
  double loss = 0.0;
  Tensor<Scalar> grad;
};

/// Mean over the batch of -log softmax(logits)[target]. `logits` is a
/// (K x batch) feature tensor; the gradient is (softmax - onehot) / batch.
template <class Scalar>
LossResult<Scalar> softmax_cross_entropy(const Tensor<Scalar>& logits, std::span<const int> targets) {
  if (logits.length != 1) throw ShapeError("cross-entropy expects feature logits (length 1)");
  if (static_cast<Index>(targets.size()) != logits.batch) throw ShapeError("target count does not match batch");
  const Index k = logits.channels;
  LossResult<Scalar> r{0.0, Tensor<Scalar>(logits.batch, k, 1)};
  const double inv_n = 1.0 / static_cast<double>(logits.batch);
  for (Index b = 0; b < logits.batch; ++b) {
    const int t = targets[static_cast<std::size_t>(b)];
    if (t < 0 || t >= k) throw IndexError("target " + std::to_string(t) + " outside [0, " + std::to_string(k) + ")");
    const auto z = logits.data.col(b).template cast<double>();
    const double zmax = z.maxCoeff();
    const Eigen::VectorXd e = (z.array() - zmax).exp();
    const double sum = e.sum();
    r.loss += (std::log(sum) + zmax - z(t)) * inv_n;
    Eigen::VectorXd g = e / sum;
    g(t) -= 1.0;
    r.grad.data.col(b) = (g * inv_n).template cast<Scalar>();
  }
  return r;
}

/// Row-wise softmax probabilities of (K x batch) logits, returned as
/// (batch x K) in double.
template <class Scalar>
Eigen::MatrixXd softmax_probabilities(const Tensor<Scalar>& logits) {
  Eigen::MatrixXd p(logits.batch, logits.channels);
  for (Index b = 0; b < logits.batch; ++b) {
    const Eigen::VectorXd z = logits.data.col(b).template cast<double>();
    const Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
    p.row(b) = (e / e.sum()).transpose();
  }
  return p;
}

/// (1/n) sum_i ||x_i - x_hat_i||^2 with n the batch size; gradient with
/// respect to x_hat is 2 (x_hat - x) / n.
template <class Scalar>
LossResult<Scalar> mse_loss(const Tensor<Scalar>& x, const Tensor<Scalar>& x_hat) {
  if (x.shape() != x_hat.shape() || x.batch != x_hat.batch) {
    throw ShapeError("mse: shape " + x.shape().str() + " vs " + x_hat.shape().str());
  }
  const double inv_n = 1.0 / static_cast<double>(x.batch);
  LossResult<Scalar> r{0.0, Tensor<Scalar>(x.batch, x.channels, x.length)};
  const RowMatrix<Scalar> diff = x_hat.data - x.data;
  r.loss = diff.template cast<double>().squaredNorm() * inv_n;
  r.grad.data = diff * static_cast<Scalar>(2.0 * inv_n);
  return r;
}

}  // namespace rfclust::nn
