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
#include <cstdint>
#include <string>

#include "rfclust/nn/network.hpp"

namespace rfclust::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0, 1)");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
  }
};

/// One Adam update of a single array at (already incremented) step `t`.
/// Weight decay is coupled: lambda * w is added to the gradient.
template <class Scalar>
void adam_update(Param<Scalar>& p, std::int64_t t, const AdamConfig& cfg) {
  if (!p.grad.allFinite()) throw NumericError("non-finite gradient at Adam step " + std::to_string(t));
  const auto b1 = static_cast<Scalar>(cfg.beta1);
  const auto b2 = static_cast<Scalar>(cfg.beta2);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  const auto step = static_cast<Scalar>(cfg.learning_rate / bc1);
  const auto inv_sqrt_bc2 = static_cast<Scalar>(1.0 / std::sqrt(bc2));
  const auto eps = static_cast<Scalar>(cfg.eps);
  const auto wd = static_cast<Scalar>(cfg.weight_decay);

  auto g = (p.grad.array() + wd * p.value.array());
  p.m.array() = b1 * p.m.array() + (1 - b1) * g;
  p.v.array() = b2 * p.v.array() + (1 - b2) * g.square();
  p.value.array() -= step * p.m.array() / (p.v.array().sqrt() * inv_sqrt_bc2 + eps);
}

/// Applies one Adam step to every trainable layer, using the gradients stored
/// by the last backward pass, to the layers in [first, last).
template <class Scalar>
void adam_step(Network<Scalar>& net, const AdamConfig& cfg, std::size_t first = 0,
               std::size_t last = static_cast<std::size_t>(-1)) {
  last = std::min(last, net.layers.size());
  for (std::size_t i = first; i < last; ++i) {
    auto& layer = net.layers[i];
    if (!layer.trainable()) continue;
    ++layer.adam_step;
    for (auto& p : layer.params) adam_update(p, layer.adam_step, cfg);
  }
}

}  // namespace rfclust::nn
