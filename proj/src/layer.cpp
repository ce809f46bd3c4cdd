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

#include "rfclust/nn/layer.hpp"

namespace rfclust::nn {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::BatchNorm1d: return "batchnorm1d";
    case LayerKind::MaxPool1d: return "maxpool1d";
    case LayerKind::ReLU: return "relu";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Unflatten: return "unflatten";
    case LayerKind::Linear: return "linear";
    case LayerKind::ConvTranspose1d: return "transposed_conv1d";
  }
  return "relu";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (auto k : {LayerKind::Conv1d, LayerKind::BatchNorm1d, LayerKind::MaxPool1d, LayerKind::ReLU, LayerKind::Flatten,
                 LayerKind::Unflatten, LayerKind::Linear, LayerKind::ConvTranspose1d}) {
    if (to_string(k) == name) return k;
  }
  throw ParseError("unknown layer kind '" + std::string(name) + "'");
}

LayerSpec LayerSpec::conv1d(Index in, Index out, Index kernel, Index stride, Index padding) {
  LayerSpec s;
  s.kind = LayerKind::Conv1d;
  s.in_channels = in;
  s.out_channels = out;
  s.kernel = kernel;
  s.stride = stride;
  s.padding = padding;
  return s;
}

LayerSpec LayerSpec::conv_transpose1d(Index in, Index out, Index kernel, Index stride, Index padding,
                                      Index output_padding) {
  LayerSpec s = conv1d(in, out, kernel, stride, padding);
  s.kind = LayerKind::ConvTranspose1d;
  s.output_padding = output_padding;
  return s;
}

LayerSpec LayerSpec::batchnorm1d(Index channels) {
  LayerSpec s;
  s.kind = LayerKind::BatchNorm1d;
  s.in_channels = channels;
  s.out_channels = channels;
  return s;
}

LayerSpec LayerSpec::maxpool1d(Index pool) {
  LayerSpec s;
  s.kind = LayerKind::MaxPool1d;
  s.pool = pool;
  s.stride = pool;
  return s;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::Flatten;
  return s;
}

LayerSpec LayerSpec::unflatten(Index channels, Index length) {
  LayerSpec s;
  s.kind = LayerKind::Unflatten;
  s.out_channels = channels;
  s.length = length;
  return s;
}

LayerSpec LayerSpec::linear(Index in, Index out) {
  LayerSpec s;
  s.kind = LayerKind::Linear;
  s.in_features = in;
  s.out_features = out;
  return s;
}

Shape LayerSpec::output_shape(Shape in) const {
  auto fail = [&](const std::string& what) -> Shape {
    throw ShapeError(std::string(to_string(kind)) + ": " + what + " (input " + in.str() + ")");
  };
  switch (kind) {
    case LayerKind::Conv1d: {
      if (in.channels != in_channels) return fail("expected " + std::to_string(in_channels) + " channels");
      const Index span = in.length + 2 * padding - kernel;
      if (span < 0 || stride < 1) return fail("kernel longer than padded input");
      return {out_channels, span / stride + 1};
    }
    case LayerKind::ConvTranspose1d: {
      if (in.channels != in_channels) return fail("expected " + std::to_string(in_channels) + " channels");
      const Index len = (in.length - 1) * stride - 2 * padding + kernel + output_padding;
      if (len < 1) return fail("empty output");
      return {out_channels, len};
    }
    case LayerKind::BatchNorm1d:
      if (in.channels != in_channels) return fail("expected " + std::to_string(in_channels) + " channels");
      return in;
    case LayerKind::MaxPool1d:
      if (pool < 1 || in.length < pool) return fail("input shorter than pool size");
      return {in.channels, in.length / pool};
    case LayerKind::ReLU:
      return in;
    case LayerKind::Flatten:
      return {in.channels * in.length, 1};
    case LayerKind::Unflatten:
      if (in.length != 1 || in.channels != out_channels * length) {
        return fail("expected " + std::to_string(out_channels * length) + " features");
      }
      return {out_channels, length};
    case LayerKind::Linear:
      if (in.length != 1 || in.channels != in_features) {
        return fail("expected " + std::to_string(in_features) + " features");
      }
      return {out_features, 1};
  }
  return in;
}

std::int64_t LayerSpec::param_count() const {
  switch (kind) {
    case LayerKind::Conv1d:
    case LayerKind::ConvTranspose1d:
      return out_channels * (in_channels * kernel + 1);
    case LayerKind::BatchNorm1d:
      return 2 * in_channels;
    case LayerKind::Linear:
      return out_features * (in_features + 1);
    default:
      return 0;
  }
}

double LayerSpec::forward_flops(Shape in) const {
  const Shape out = output_shape(in);
  switch (kind) {
    case LayerKind::Conv1d:
    case LayerKind::ConvTranspose1d:
      return 2.0 * static_cast<double>(in_channels * kernel * out_channels) * static_cast<double>(out.length);
    case LayerKind::Linear:
      return 2.0 * static_cast<double>(in_features * out_features);
    default:
      return 0.0;
  }
}

}  // namespace rfclust::nn
