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
#include <string_view>
#include <vector>

#include "rfclust/nn/tensor.hpp"

namespace rfclust::nn {

enum class LayerKind { Conv1d, BatchNorm1d, MaxPool1d, ReLU, Flatten, Unflatten, Linear, ConvTranspose1d };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

enum class Mode { Train, Eval };

/// Hyperparameters of one layer. Fields not used by a kind stay zero.
struct LayerSpec {
  LayerKind kind = LayerKind::ReLU;
  Index in_channels = 0;
  Index out_channels = 0;
  Index kernel = 0;
  Index stride = 1;
  Index padding = 0;
  Index output_padding = 0;
  Index pool = 0;
  Index in_features = 0;
  Index out_features = 0;
  Index length = 0;  // unflatten target length

  static LayerSpec conv1d(Index in, Index out, Index kernel, Index stride = 1, Index padding = 0);
  static LayerSpec conv_transpose1d(Index in, Index out, Index kernel, Index stride, Index padding,
                                    Index output_padding);
  static LayerSpec batchnorm1d(Index channels);
  static LayerSpec maxpool1d(Index pool);
  static LayerSpec relu();
  static LayerSpec flatten();
  static LayerSpec unflatten(Index channels, Index length);
  static LayerSpec linear(Index in, Index out);

  /// Per-sample output shape; throws ShapeError when `in` does not fit.
  [[nodiscard]] Shape output_shape(Shape in) const;
  /// Trainable parameters (batchnorm: gamma and beta; running stats excluded).
  [[nodiscard]] std::int64_t param_count() const;
  /// Single-sample forward FLOPs, one multiply-accumulate = 2 FLOPs, counted
  /// for conv / transposed conv / linear only. A transposed convolution is
  /// counted as the equivalent dense convolution over its output length.
  [[nodiscard]] double forward_flops(Shape in) const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// One trainable array with its gradient and Adam moments.
template <class Scalar>
struct Param {
  RowMatrix<Scalar> value;
  RowMatrix<Scalar> grad;
  RowMatrix<Scalar> m;
  RowMatrix<Scalar> v;

  Param() = default;
  Param(Index rows, Index cols)
      : value(RowMatrix<Scalar>::Zero(rows, cols)),
        grad(RowMatrix<Scalar>::Zero(rows, cols)),
        m(RowMatrix<Scalar>::Zero(rows, cols)),
        v(RowMatrix<Scalar>::Zero(rows, cols)) {}

  void reset_moments() {
    m.setZero();
    v.setZero();
  }

  template <class Other>
  [[nodiscard]] Param<Other> cast() const {
    Param<Other> p;
    p.value = value.template cast<Other>();
    p.grad = grad.template cast<Other>();
    p.m = m.template cast<Other>();
    p.v = v.template cast<Other>();
    return p;
  }
};

/// A layer with its parameters. Parameter layout:
///   conv1d:           [weight (out, in*k), bias (out, 1)]
///   conv_transpose1d: [weight (in, out*k), bias (out, 1)]
///   linear:           [weight (out, in), bias (out, 1)]
///   batchnorm1d:      [gamma (ch, 1), beta (ch, 1)] + running mean/var
template <class Scalar>
struct Layer {
  static constexpr double kBnEps = 1e-5;
  static constexpr double kBnMomentum = 0.1;

  LayerSpec spec;
  std::vector<Param<Scalar>> params;
  ColVector<Scalar> running_mean;
  ColVector<Scalar> running_var;
  std::int64_t adam_step = 0;

  Layer() = default;
  explicit Layer(const LayerSpec& s) : spec(s) {
    switch (s.kind) {
      case LayerKind::Conv1d:
        params.emplace_back(s.out_channels, s.in_channels * s.kernel);
        params.emplace_back(s.out_channels, 1);
        break;
      case LayerKind::ConvTranspose1d:
        params.emplace_back(s.in_channels, s.out_channels * s.kernel);
        params.emplace_back(s.out_channels, 1);
        break;
      case LayerKind::Linear:
        params.emplace_back(s.out_features, s.in_features);
        params.emplace_back(s.out_features, 1);
        break;
      case LayerKind::BatchNorm1d:
        params.emplace_back(s.in_channels, 1);
        params.emplace_back(s.in_channels, 1);
        params[0].value.setOnes();
        running_mean = ColVector<Scalar>::Zero(s.in_channels);
        running_var = ColVector<Scalar>::Ones(s.in_channels);
        break;
      default:
        break;
    }
  }

  [[nodiscard]] bool trainable() const { return !params.empty(); }

  /// Fan-in used for weight initialization.
  [[nodiscard]] Index fan_in() const {
    switch (spec.kind) {
      case LayerKind::Conv1d: return spec.in_channels * spec.kernel;
      case LayerKind::ConvTranspose1d: return std::max<Index>(1, spec.in_channels * spec.kernel / spec.stride);
      case LayerKind::Linear: return spec.in_features;
      default: return 0;
    }
  }

  void zero_grad() {
    for (auto& p : params) p.grad.setZero();
  }

  template <class Other>
  [[nodiscard]] Layer<Other> cast() const {
    Layer<Other> out;
    out.spec = spec;
    for (const auto& p : params) out.params.push_back(p.template cast<Other>());
    out.running_mean = running_mean.template cast<Other>();
    out.running_var = running_var.template cast<Other>();
    out.adam_step = adam_step;
    return out;
  }
};

/// Values saved by a forward pass for the matching backward pass.
template <class Scalar>
struct LayerCache {
  Mode mode = Mode::Eval;
  Tensor<Scalar> input;             // relu, linear, flatten/unflatten, conv-transpose
  RowMatrix<Scalar> cols;           // conv1d im2col
  RowMatrix<Scalar> xhat;           // batchnorm normalized input
  ColVector<Scalar> inv_std;        // batchnorm
  std::vector<Index> argmax;        // maxpool, flat column index into the input row
  Shape in_shape;
  Index batch = 0;
};

namespace detail {

template <class Scalar>
void im2col(const Tensor<Scalar>& x, const LayerSpec& s, Index out_len, RowMatrix<Scalar>& cols) {
  const Index k = s.kernel;
  cols.setZero(x.channels * k, x.batch * out_len);
  for (Index c = 0; c < x.channels; ++c) {
    for (Index kk = 0; kk < k; ++kk) {
      const Index row = c * k + kk;
      // valid output positions: 0 <= lo*stride + kk - pad < L
      const Index offset = kk - s.padding;
      Index lo_begin = offset >= 0 ? 0 : (-offset + s.stride - 1) / s.stride;
      Index lo_end = (x.length - 1 - offset) >= 0 ? std::min(out_len, (x.length - 1 - offset) / s.stride + 1) : 0;
      if (lo_begin >= lo_end) continue;
      for (Index b = 0; b < x.batch; ++b) {
        if (s.stride == 1) {
          cols.row(row).segment(b * out_len + lo_begin, lo_end - lo_begin) =
              x.data.row(c).segment(b * x.length + lo_begin + offset, lo_end - lo_begin);
        } else {
          for (Index lo = lo_begin; lo < lo_end; ++lo) {
            cols(row, b * out_len + lo) = x.data(c, b * x.length + lo * s.stride + offset);
          }
        }
      }
    }
  }
}

template <class Scalar>
void col2im(const RowMatrix<Scalar>& cols, const LayerSpec& s, Index out_len, Tensor<Scalar>& gx) {
  const Index k = s.kernel;
  for (Index c = 0; c < gx.channels; ++c) {
    for (Index kk = 0; kk < k; ++kk) {
      const Index row = c * k + kk;
      const Index offset = kk - s.padding;
      Index lo_begin = offset >= 0 ? 0 : (-offset + s.stride - 1) / s.stride;
      Index lo_end = (gx.length - 1 - offset) >= 0 ? std::min(out_len, (gx.length - 1 - offset) / s.stride + 1) : 0;
      if (lo_begin >= lo_end) continue;
      for (Index b = 0; b < gx.batch; ++b) {
        if (s.stride == 1) {
          gx.data.row(c).segment(b * gx.length + lo_begin + offset, lo_end - lo_begin) +=
              cols.row(row).segment(b * out_len + lo_begin, lo_end - lo_begin);
        } else {
          for (Index lo = lo_begin; lo < lo_end; ++lo) {
            gx.data(c, b * gx.length + lo * s.stride + offset) += cols(row, b * out_len + lo);
          }
        }
      }
    }
  }
}

inline std::string where(Index index) {
  return index >= 0 ? "layer " + std::to_string(index) + ": " : std::string{};
}

}  // namespace detail

namespace detail {

template <class Scalar>
Tensor<Scalar> forward_impl(const Layer<Scalar>& layer, const Tensor<Scalar>& x, Mode mode, LayerCache<Scalar>* cache,
                            Index index, ColVector<Scalar>* batch_mean, ColVector<Scalar>* batch_var) {
  const LayerSpec& s = layer.spec;
  Shape out_shape;
  try {
    out_shape = s.output_shape(x.shape());
  } catch (const ShapeError& e) {
    throw ShapeError(detail::where(index) + e.what());
  }
  if (cache) {
    cache->mode = mode;
    cache->in_shape = x.shape();
    cache->batch = x.batch;
  }
  Tensor<Scalar> y(x.batch, out_shape.channels, out_shape.length);

  switch (s.kind) {
    case LayerKind::Conv1d: {
      RowMatrix<Scalar> local;
      RowMatrix<Scalar>& cols = cache ? cache->cols : local;
      detail::im2col(x, s, out_shape.length, cols);
      y.data.noalias() = layer.params[0].value * cols;
      y.data.colwise() += layer.params[1].value.col(0);
      break;
    }
    case LayerKind::ConvTranspose1d: {
      const Index k = s.kernel;
      const RowMatrix<Scalar> ycols = layer.params[0].value.transpose() * x.data;  // (out*k, B*L)
      y.data.colwise() = layer.params[1].value.col(0);
      for (Index co = 0; co < s.out_channels; ++co) {
        for (Index kk = 0; kk < k; ++kk) {
          const Index row = co * k + kk;
          for (Index b = 0; b < x.batch; ++b) {
            for (Index i = 0; i < x.length; ++i) {
              const Index pos = i * s.stride - s.padding + kk;
              if (pos < 0 || pos >= out_shape.length) continue;
              y.data(co, b * out_shape.length + pos) += ycols(row, b * x.length + i);
            }
          }
        }
      }
      if (cache) cache->input = x;
      break;
    }
    case LayerKind::Linear: {
      y.data.noalias() = layer.params[0].value * x.data;
      y.data.colwise() += layer.params[1].value.col(0);
      if (cache) cache->input = x;
      break;
    }
    case LayerKind::BatchNorm1d: {
      const auto& gamma = layer.params[0].value;
      const auto& beta = layer.params[1].value;
      const Index n = x.data.cols();
      if (mode == Mode::Train) {
        if (x.batch < 2) throw ShapeError(detail::where(index) + "batchnorm in train mode needs batch >= 2");
        // One channel row at a time so every pass stays in cache.
        const Index rows = x.data.rows();
        ColVector<Scalar> mean(rows);
        ColVector<Scalar> var(rows);
        ColVector<Scalar> inv_std(rows);
        RowMatrix<Scalar> xhat(rows, n);
        for (Index c = 0; c < rows; ++c) {
          mean(c) = x.data.row(c).mean();
          xhat.row(c).array() = x.data.row(c).array() - mean(c);
          var(c) = xhat.row(c).squaredNorm() / static_cast<Scalar>(n);
          inv_std(c) = Scalar(1) / std::sqrt(var(c) + static_cast<Scalar>(Layer<Scalar>::kBnEps));
          xhat.row(c) *= inv_std(c);
          y.data.row(c).array() = xhat.row(c).array() * gamma(c, 0) + beta(c, 0);
        }
        if (batch_mean) *batch_mean = mean;
        if (batch_var) *batch_var = var;
        if (cache) {
          cache->xhat = std::move(xhat);
          cache->inv_std = inv_std;
        }
      } else {
        const ColVector<Scalar> inv_std =
            (layer.running_var.array() + static_cast<Scalar>(Layer<Scalar>::kBnEps)).rsqrt();
        const ColVector<Scalar> scale = gamma.col(0).array() * inv_std.array();
        const ColVector<Scalar> shift = beta.col(0).array() - layer.running_mean.array() * scale.array();
        y.data = (x.data.array().colwise() * scale.array()).colwise() + shift.array();
        if (cache) {
          cache->inv_std = inv_std;
          cache->xhat = (x.data.colwise() - layer.running_mean).array().colwise() * inv_std.array();
        }
      }
      break;
    }
    case LayerKind::MaxPool1d: {
      const Index p = s.pool;
      if (cache) cache->argmax.resize(static_cast<std::size_t>(y.data.size()));
      for (Index c = 0; c < x.channels; ++c) {
        const Scalar* in = x.data.row(c).data();
        Scalar* out = y.data.row(c).data();
        for (Index b = 0; b < x.batch; ++b) {
          for (Index j = 0; j < out_shape.length; ++j) {
            const Index base = b * x.length + j * p;
            Index best = base;
            for (Index t = 1; t < p; ++t) {
              if (in[base + t] > in[best]) best = base + t;
            }
            const Index o = b * out_shape.length + j;
            out[o] = in[best];
            if (cache) cache->argmax[static_cast<std::size_t>(c * y.data.cols() + o)] = best;
          }
        }
      }
      break;
    }
    case LayerKind::ReLU: {
      y.data = x.data.cwiseMax(Scalar(0));
      if (cache) cache->input = x;
      break;
    }
    case LayerKind::Flatten: {
      for (Index b = 0; b < x.batch; ++b) {
        for (Index c = 0; c < x.channels; ++c) {
          for (Index l = 0; l < x.length; ++l) y.data(c * x.length + l, b) = x.data(c, b * x.length + l);
        }
      }
      break;
    }
    case LayerKind::Unflatten: {
      for (Index b = 0; b < x.batch; ++b) {
        for (Index c = 0; c < out_shape.channels; ++c) {
          for (Index l = 0; l < out_shape.length; ++l) {
            y.data(c, b * out_shape.length + l) = x.data(c * out_shape.length + l, b);
          }
        }
      }
      break;
    }
  }
  return y;
}

}  // namespace detail

/// Forward pass of one layer. When `cache` is non-null the values needed by
/// layer_backward are stored in it. Batchnorm in train mode normalizes with
/// batch statistics and updates the running statistics (momentum 0.1,
/// unbiased variance).
template <class Scalar>
Tensor<Scalar> layer_forward(Layer<Scalar>& layer, const Tensor<Scalar>& x, Mode mode, LayerCache<Scalar>* cache,
                             Index index = -1) {
  ColVector<Scalar> mean;
  ColVector<Scalar> var;
  Tensor<Scalar> y = detail::forward_impl(layer, x, mode, cache, index, &mean, &var);
  if (mode == Mode::Train && layer.spec.kind == LayerKind::BatchNorm1d) {
    const Index n = x.data.cols();
    const Scalar mom = static_cast<Scalar>(Layer<Scalar>::kBnMomentum);
    const Scalar unbias = static_cast<Scalar>(n) / static_cast<Scalar>(std::max<Index>(n - 1, 1));
    layer.running_mean = (1 - mom) * layer.running_mean + mom * mean;
    layer.running_var = (1 - mom) * layer.running_var + mom * unbias * var;
  }
  return y;
}

/// Eval-mode forward that leaves the layer untouched; safe to call
/// concurrently on a shared layer.
template <class Scalar>
Tensor<Scalar> layer_infer(const Layer<Scalar>& layer, const Tensor<Scalar>& x, Index index = -1) {
  return detail::forward_impl(layer, x, Mode::Eval, static_cast<LayerCache<Scalar>*>(nullptr), index,
                              static_cast<ColVector<Scalar>*>(nullptr), static_cast<ColVector<Scalar>*>(nullptr));
}

/// Backward pass of one layer: writes parameter gradients into
/// `layer.params[i].grad` and returns the gradient with respect to the input.
template <class Scalar>
Tensor<Scalar> layer_backward(Layer<Scalar>& layer, const LayerCache<Scalar>& cache, const Tensor<Scalar>& grad_out,
                              Index index = -1) {
  const LayerSpec& s = layer.spec;
  const Shape expected = s.output_shape(cache.in_shape);
  if (grad_out.shape() != expected || grad_out.batch != cache.batch) {
    throw ShapeError(detail::where(index) + "gradient shape " + grad_out.shape().str() + " does not match output " +
                     expected.str());
  }
  Tensor<Scalar> gx(cache.batch, cache.in_shape.channels, cache.in_shape.length);
  const auto& gy = grad_out.data;

  switch (s.kind) {
    case LayerKind::Conv1d: {
      layer.params[0].grad.noalias() = gy * cache.cols.transpose();
      layer.params[1].grad = gy.rowwise().sum();
      const RowMatrix<Scalar> gcols = layer.params[0].value.transpose() * gy;
      detail::col2im(gcols, s, expected.length, gx);
      break;
    }
    case LayerKind::ConvTranspose1d: {
      const Index k = s.kernel;
      const Index in_len = cache.in_shape.length;
      RowMatrix<Scalar> gcols = RowMatrix<Scalar>::Zero(s.out_channels * k, cache.batch * in_len);
      for (Index co = 0; co < s.out_channels; ++co) {
        for (Index kk = 0; kk < k; ++kk) {
          const Index row = co * k + kk;
          for (Index b = 0; b < cache.batch; ++b) {
            for (Index i = 0; i < in_len; ++i) {
              const Index pos = i * s.stride - s.padding + kk;
              if (pos < 0 || pos >= expected.length) continue;
              gcols(row, b * in_len + i) = gy(co, b * expected.length + pos);
            }
          }
        }
      }
      layer.params[0].grad.noalias() = cache.input.data * gcols.transpose();
      layer.params[1].grad = gy.rowwise().sum();
      gx.data.noalias() = layer.params[0].value * gcols;
      break;
    }
    case LayerKind::Linear: {
      layer.params[0].grad.noalias() = gy * cache.input.data.transpose();
      layer.params[1].grad = gy.rowwise().sum();
      gx.data.noalias() = layer.params[0].value.transpose() * gy;
      break;
    }
    case LayerKind::BatchNorm1d: {
      const auto& gamma = layer.params[0].value;
      if (cache.mode == Mode::Train) {
        const Index n = gy.cols();
        layer.params[0].grad.resize(gy.rows(), 1);
        layer.params[1].grad.resize(gy.rows(), 1);
        for (Index c = 0; c < gy.rows(); ++c) {
          const Scalar gb = gy.row(c).sum();
          const Scalar gg = gy.row(c).dot(cache.xhat.row(c));
          layer.params[0].grad(c, 0) = gg;
          layer.params[1].grad(c, 0) = gb;
          // dx = gamma * inv_std / n * (n * gy - sum(gy) - xhat * sum(gy * xhat))
          const Scalar scale = gamma(c, 0) * cache.inv_std(c) / static_cast<Scalar>(n);
          gx.data.row(c).array() =
              scale * (static_cast<Scalar>(n) * gy.row(c).array() - gb - cache.xhat.row(c).array() * gg);
        }
      } else {
        // Running statistics are constants here.
        layer.params[0].grad = (gy.array() * cache.xhat.array()).rowwise().sum();
        layer.params[1].grad = gy.rowwise().sum();
        gx.data = gy.array().colwise() * (gamma.col(0).array() * cache.inv_std.array());
      }
      break;
    }
    case LayerKind::MaxPool1d: {
      if (cache.argmax.size() != static_cast<std::size_t>(gy.size())) {
        throw ShapeError(detail::where(index) + "maxpool cache does not match gradient");
      }
      for (Index c = 0; c < gy.rows(); ++c) {
        for (Index o = 0; o < gy.cols(); ++o) {
          gx.data(c, cache.argmax[static_cast<std::size_t>(c * gy.cols() + o)]) += gy(c, o);
        }
      }
      break;
    }
    case LayerKind::ReLU: {
      gx.data = (cache.input.data.array() > Scalar(0)).select(gy, Scalar(0));
      break;
    }
    case LayerKind::Flatten: {
      const Index len = cache.in_shape.length;
      for (Index b = 0; b < cache.batch; ++b) {
        for (Index c = 0; c < cache.in_shape.channels; ++c) {
          for (Index l = 0; l < len; ++l) gx.data(c, b * len + l) = gy(c * len + l, b);
        }
      }
      break;
    }
    case LayerKind::Unflatten: {
      for (Index b = 0; b < cache.batch; ++b) {
        for (Index c = 0; c < expected.channels; ++c) {
          for (Index l = 0; l < expected.length; ++l) {
            gx.data(c * expected.length + l, b) = gy(c, b * expected.length + l);
          }
        }
      }
      break;
    }
  }
  return gx;
}

}  // namespace rfclust::nn
