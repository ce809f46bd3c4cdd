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
#include <string_view>
#include <vector>

#include "rfclust/nn/layer.hpp"
#include "rfclust/rng.hpp"

namespace rfclust::nn {

enum class Architecture { Ssdc, Ae };

std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view name);

/// Input shape of every network: one channel of 1024 FFT bins.
inline constexpr Shape kInputShape{1, 1024};

/// Layer stack of the shared convolutional encoder:
/// four blocks conv(k7, pad 3) -> batchnorm -> maxpool(4) -> relu with
/// 16/32/64/128 filters, then flatten to 512 features.
std::vector<LayerSpec> encoder_specs();
/// SSDC: encoder + linear(512, 100) + relu + linear(100, K).
std::vector<LayerSpec> ssdc_specs(int num_clusters);
/// Autoencoder: encoder + linear(512, 10) + linear(10, 512) + unflatten(128, 4)
/// and four decoder blocks batchnorm -> relu -> transposed conv(k7, stride 4).
std::vector<LayerSpec> ae_specs(int embed_dim = 10);

/// Trainable weights of one of the two networks, with Adam state.
///
/// Layers [0, encoder_end) form the convolutional encoder whose output is the
/// 512-d flattened representation. Layers [0, embedding_end) produce the
/// embedding that is clustered (512-d for SSDC, 10-d for the autoencoder).
template <class Scalar>
struct Network {
  Architecture arch = Architecture::Ssdc;
  int num_clusters = 0;
  std::size_t encoder_end = 0;
  std::size_t embedding_end = 0;
  std::vector<Layer<Scalar>> layers;

  [[nodiscard]] std::size_t size() const { return layers.size(); }

  [[nodiscard]] std::vector<LayerSpec> specs() const {
    std::vector<LayerSpec> out;
    for (const auto& l : layers) out.push_back(l.spec);
    return out;
  }

  [[nodiscard]] std::int64_t param_count() const {
    std::int64_t n = 0;
    for (const auto& l : layers) n += l.spec.param_count();
    return n;
  }

  /// Runs layers [first, last). With `caches` the per-layer caches are kept
  /// (caches->size() becomes last - first).
  Tensor<Scalar> forward(const Tensor<Scalar>& x, Mode mode, std::size_t first, std::size_t last,
                         std::vector<LayerCache<Scalar>>* caches = nullptr) {
    if (caches) caches->assign(last - first, LayerCache<Scalar>{});
    Tensor<Scalar> h = x;
    for (std::size_t i = first; i < last; ++i) {
      h = layer_forward(layers[i], h, mode, caches ? &(*caches)[i - first] : nullptr, static_cast<Index>(i));
      if (!h.all_finite()) {
        throw NumericError("layer " + std::to_string(i) + " (" + std::string(to_string(layers[i].spec.kind)) +
                           ") produced non-finite values");
      }
    }
    return h;
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Mode mode, std::vector<LayerCache<Scalar>>* caches = nullptr) {
    return forward(x, mode, 0, layers.size(), caches);
  }

  /// Eval-mode forward through layers [first, last) without touching any
  /// state.
  [[nodiscard]] Tensor<Scalar> infer(const Tensor<Scalar>& x, std::size_t first, std::size_t last) const {
    Tensor<Scalar> h = x;
    for (std::size_t i = first; i < last; ++i) {
      h = layer_infer(layers[i], h, static_cast<Index>(i));
      if (!h.all_finite()) throw NumericError("layer " + std::to_string(i) + " produced non-finite values");
    }
    return h;
  }

  /// Backpropagates through layers [first, last) given the caches produced by
  /// forward() over the same range. Returns the gradient w.r.t. the input.
  Tensor<Scalar> backward(const std::vector<LayerCache<Scalar>>& caches, const Tensor<Scalar>& grad, std::size_t first,
                          std::size_t last) {
    if (caches.size() != last - first) throw ShapeError("cache count does not match layer range");
    Tensor<Scalar> g = grad;
    for (std::size_t i = last; i-- > first;) {
      g = layer_backward(layers[i], caches[i - first], g, static_cast<Index>(i));
    }
    return g;
  }

  void zero_grad() {
    for (auto& l : layers) l.zero_grad();
  }

  /// Fan-in scaled uniform init, bound sqrt(6 / fan_in); biases zero;
  /// batchnorm gamma = 1, beta = 0 and fresh running statistics.
  static void init_layer(Layer<Scalar>& layer, Rng& rng) {
    layer.adam_step = 0;
    for (auto& p : layer.params) {
      p.reset_moments();
      p.grad.setZero();
    }
    switch (layer.spec.kind) {
      case LayerKind::Conv1d:
      case LayerKind::ConvTranspose1d:
      case LayerKind::Linear: {
        const double bound = std::sqrt(6.0 / static_cast<double>(layer.fan_in()));
        auto& w = layer.params[0].value;
        for (Index r = 0; r < w.rows(); ++r) {
          for (Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<Scalar>(rng.uniform(-bound, bound));
        }
        layer.params[1].value.setZero();
        break;
      }
      case LayerKind::BatchNorm1d:
        layer.params[0].value.setOnes();
        layer.params[1].value.setZero();
        layer.running_mean.setZero();
        layer.running_var.setOnes();
        break;
      default:
        break;
    }
  }

  template <class Other>
  [[nodiscard]] Network<Other> cast() const {
    Network<Other> out;
    out.arch = arch;
    out.num_clusters = num_clusters;
    out.encoder_end = encoder_end;
    out.embedding_end = embedding_end;
    for (const auto& l : layers) out.layers.push_back(l.template cast<Other>());
    return out;
  }
};

/// Builds layers from specs and checks the shape pipeline from kInputShape.
template <class Scalar>
Network<Scalar> make_network(Architecture arch, int num_clusters, const std::vector<LayerSpec>& specs,
                             std::uint64_t seed) {
  Network<Scalar> net;
  net.arch = arch;
  net.num_clusters = num_clusters;
  Shape shape = kInputShape;
  Rng rng = Rng::derive(seed, "init");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    try {
      shape = specs[i].output_shape(shape);
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(i) + ": " + e.what());
    }
    Layer<Scalar> layer(specs[i]);
    Network<Scalar>::init_layer(layer, rng);
    net.layers.push_back(std::move(layer));
  }
  net.encoder_end = encoder_specs().size();
  net.embedding_end = arch == Architecture::Ssdc ? net.encoder_end : net.encoder_end + 1;
  return net;
}

template <class Scalar>
Network<Scalar> make_ssdc(int num_clusters, std::uint64_t seed) {
  if (num_clusters < 2) throw ConfigError("SSDC needs K >= 2");
  return make_network<Scalar>(Architecture::Ssdc, num_clusters, ssdc_specs(num_clusters), seed);
}

template <class Scalar>
Network<Scalar> make_ae(int num_clusters, std::uint64_t seed, int embed_dim = 10) {
  return make_network<Scalar>(Architecture::Ae, num_clusters, ae_specs(embed_dim), seed);
}

struct ComplexityReport {
  std::int64_t trainable_params = 0;
  double forward_gflops = 0.0;
};

/// Parameter count and single-sample forward GFLOPs (conv/transposed
/// conv/linear only, MAC = 2 FLOPs) over the whole layer list.
ComplexityReport complexity_report(const std::vector<LayerSpec>& specs, Shape input = kInputShape);

template <class Scalar>
ComplexityReport complexity_report(const Network<Scalar>& net) {
  return complexity_report(net.specs());
}

}  // namespace rfclust::nn
