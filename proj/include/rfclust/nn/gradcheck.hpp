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

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "rfclust/nn/loss.hpp"
#include "rfclust/nn/network.hpp"

namespace rfclust::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // which entry produced max_rel_error
  std::size_t checked = 0;
  /// Probes whose +-step interval crosses a relu or maxpool switch point,
  /// where the loss is not differentiable. They are not compared.
  std::size_t skipped = 0;
};

/// Scalar loss over the network output, with its gradient.
using LossFn = std::function<LossResult<double>(const Tensor<double>&)>;

struct GradCheckOptions {
  double step = 1e-4;
  /// Entries sampled per parameter array and from the input; 0 = all.
  std::size_t max_entries = 0;
  /// Relative error is |a - n| / max(|a|, |n|, abs_floor * max(1, |loss|)).
  /// Scaling with the loss keeps finite-difference roundoff on structurally
  /// zero gradients (conv biases in front of batchnorm) below the floor.
  double abs_floor = 1e-6;
  std::uint64_t seed = 0;
  Mode mode = Mode::Train;
};

namespace detail {

// Hash of every relu sign and maxpool argmax in the forward pass; equal
// hashes mean both probe points lie on the same linear piece.
inline std::uint64_t activation_pattern(const Network<double>& net, const std::vector<LayerCache<double>>& caches) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  for (std::size_t i = 0; i < caches.size(); ++i) {
    switch (net.layers[i].spec.kind) {
      case LayerKind::MaxPool1d:
        for (Index a : caches[i].argmax) mix(static_cast<std::uint64_t>(a));
        break;
      case LayerKind::ReLU: {
        const auto& in = caches[i].input.data;
        for (Index e = 0; e < in.size(); ++e) mix(in.data()[e] > 0.0 ? 1 : 2);
        break;
      }
      default:
        break;
    }
  }
  return h;
}

inline std::vector<Index> pick_entries(Index size, std::size_t max_entries, Rng& rng) {
  std::vector<Index> all(static_cast<std::size_t>(size));
  std::iota(all.begin(), all.end(), Index{0});
  if (max_entries == 0 || all.size() <= max_entries) return all;
  rng.shuffle(all);
  all.resize(max_entries);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace detail

/// Compares backpropagated gradients of `loss(net(x))` against central
/// finite differences, over parameters of every layer and over the input.
/// Probes that straddle a relu or maxpool switch are counted in `skipped`.
inline GradCheckResult grad_check(Network<double>& net, const Tensor<double>& x, const LossFn& loss,
                                  const GradCheckOptions& opt = {}) {
  std::vector<LayerCache<double>> caches;
  net.zero_grad();
  const Tensor<double> y = net.forward(x, opt.mode, &caches);
  const LossResult<double> base = loss(y);
  const Tensor<double> grad_x = net.backward(caches, base.grad, 0, net.size());
  const std::uint64_t base_pattern = detail::activation_pattern(net, caches);

  // Running statistics are not part of the function in train mode, but eval
  // mode reads them, so they are restored after every probe.
  std::vector<std::pair<ColVector<double>, ColVector<double>>> saved;
  for (const auto& l : net.layers) saved.emplace_back(l.running_mean, l.running_var);
  auto restore = [&] {
    for (std::size_t i = 0; i < net.size(); ++i) {
      net.layers[i].running_mean = saved[i].first;
      net.layers[i].running_var = saved[i].second;
    }
  };
  // Loss at `input`; `smooth` is cleared when the activation pattern differs
  // from the base point.
  auto eval = [&](const Tensor<double>& input, bool& smooth) {
    std::vector<LayerCache<double>> probe_caches;
    const Tensor<double> out = net.forward(input, opt.mode, &probe_caches);
    smooth = smooth && detail::activation_pattern(net, probe_caches) == base_pattern;
    restore();
    return loss(out).loss;
  };

  GradCheckResult result;
  Rng rng = Rng::derive(opt.seed, "gradcheck");
  const double floor = opt.abs_floor * std::max(1.0, std::abs(base.loss));
  auto record = [&](double analytic, double numeric, bool smooth, const std::string& what) {
    if (!smooth) {
      ++result.skipped;
      return;
    }
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    const double rel = std::abs(analytic - numeric) / denom;
    ++result.checked;
    if (result.worst.empty() || rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst = what + " analytic=" + std::to_string(analytic) + " numeric=" + std::to_string(numeric);
    }
  };

  for (std::size_t li = 0; li < net.size(); ++li) {
    auto& layer = net.layers[li];
    for (std::size_t pi = 0; pi < layer.params.size(); ++pi) {
      auto& p = layer.params[pi];
      const RowMatrix<double> analytic = p.grad;
      for (Index e : detail::pick_entries(p.value.size(), opt.max_entries, rng)) {
        double& w = p.value.data()[e];
        const double orig = w;
        bool smooth = true;
        w = orig + opt.step;
        const double lp = eval(x, smooth);
        w = orig - opt.step;
        const double lm = eval(x, smooth);
        w = orig;
        record(analytic.data()[e], (lp - lm) / (2 * opt.step), smooth,
               "layer " + std::to_string(li) + " param " + std::to_string(pi) + "[" + std::to_string(e) + "]");
      }
    }
  }
  Tensor<double> probe = x;
  for (Index e : detail::pick_entries(x.data.size(), opt.max_entries, rng)) {
    double& v = probe.data.data()[e];
    const double orig = v;
    bool smooth = true;
    v = orig + opt.step;
    const double lp = eval(probe, smooth);
    v = orig - opt.step;
    const double lm = eval(probe, smooth);
    v = orig;
    record(grad_x.data.data()[e], (lp - lm) / (2 * opt.step), smooth, "input[" + std::to_string(e) + "]");
  }
  return result;
}

/// Loss sum(r * y) with a fixed random projection r; exercises every output
/// element of a layer with a non-degenerate upstream gradient.
inline LossFn random_projection_loss(Shape out_shape, Index batch, std::uint64_t seed) {
  Tensor<double> r(batch, out_shape.channels, out_shape.length);
  Rng rng = Rng::derive(seed, "projection");
  for (Index i = 0; i < r.data.size(); ++i) r.data.data()[i] = rng.uniform(-1.0, 1.0);
  return [r](const Tensor<double>& y) {
    if (y.data.rows() != r.data.rows() || y.data.cols() != r.data.cols()) throw ShapeError("projection shape");
    LossResult<double> out{(y.data.array() * r.data.array()).sum(), r};
    return out;
  };
}

/// Network made of `specs` applied to (channels x length) inputs, with
/// seeded random weights and non-trivial batchnorm affine parameters.
inline Network<double> make_fragment(const std::vector<LayerSpec>& specs, Shape input, std::uint64_t seed) {
  Network<double> net;
  Rng rng = Rng::derive(seed, "fragment");
  Shape shape = input;
  for (const auto& s : specs) {
    shape = s.output_shape(shape);
    Layer<double> layer(s);
    Network<double>::init_layer(layer, rng);
    for (auto& p : layer.params) {
      if (s.kind == LayerKind::BatchNorm1d || p.value.cols() == 1) {
        for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] += rng.uniform(-0.5, 0.5);
      }
    }
    if (s.kind == LayerKind::BatchNorm1d) {
      for (Index i = 0; i < layer.running_mean.size(); ++i) {
        layer.running_mean[i] = rng.uniform(-0.5, 0.5);
        layer.running_var[i] = rng.uniform(0.5, 2.0);
      }
    }
    net.layers.push_back(std::move(layer));
  }
  net.encoder_end = net.embedding_end = net.layers.size();
  return net;
}

/// Random (batch x channels x length) input, uniform in [-1, 1].
inline Tensor<double> random_input(Index batch, Shape shape, std::uint64_t seed) {
  Tensor<double> x(batch, shape.channels, shape.length);
  Rng rng = Rng::derive(seed, "input");
  for (Index i = 0; i < x.data.size(); ++i) x.data.data()[i] = rng.uniform(-1.0, 1.0);
  return x;
}

/// Gradient check of a layer stack on a random input with a random
/// projection loss. Small shapes keep the probe count tractable.
inline GradCheckResult grad_check(const std::vector<LayerSpec>& specs, Index batch, Shape input, std::uint64_t seed,
                                  Mode mode = Mode::Train) {
  Network<double> net = make_fragment(specs, input, seed);
  Shape out = input;
  for (const auto& s : specs) out = s.output_shape(out);
  GradCheckOptions opt;
  opt.seed = seed;
  opt.mode = mode;
  return grad_check(net, random_input(batch, input, seed), random_projection_loss(out, batch, seed), opt);
}

}  // namespace rfclust::nn
