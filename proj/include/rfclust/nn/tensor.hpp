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

#include <string>

#include <Eigen/Dense>

#include "rfclust/errors.hpp"

namespace rfclust::nn {

using Eigen::Index;

template <class Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar>
using ColVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Per-sample shape (channels x length).
struct Shape {
  Index channels = 0;
  Index length = 0;

  friend bool operator==(const Shape&, const Shape&) = default;
  [[nodiscard]] Index size() const { return channels * length; }
  [[nodiscard]] std::string str() const {
    return std::to_string(channels) + "x" + std::to_string(length);
  }
};

/// (batch, channels, length) activations.
///
/// Stored channel-major: `data` is channels x (batch * length) and sample b
/// occupies columns [b * length, (b + 1) * length). Feature vectors are the
/// length-1 case, so a batch of features is a plain (features x batch) matrix.
template <class Scalar>
struct Tensor {
  Index batch = 0;
  Index channels = 0;
  Index length = 0;
  RowMatrix<Scalar> data;

  Tensor() = default;
  Tensor(Index b, Index c, Index l) : batch(b), channels(c), length(l), data(RowMatrix<Scalar>::Zero(c, b * l)) {
    if (b < 1 || c < 1 || l < 1) throw ShapeError("tensor dimensions must be >= 1");
  }

  [[nodiscard]] Shape shape() const { return {channels, length}; }

  Scalar& operator()(Index b, Index c, Index l) { return data(c, b * length + l); }
  Scalar operator()(Index b, Index c, Index l) const { return data(c, b * length + l); }

  template <class Other>
  [[nodiscard]] Tensor<Other> cast() const {
    Tensor<Other> out;
    out.batch = batch;
    out.channels = channels;
    out.length = length;
    out.data = data.template cast<Other>();
    return out;
  }

  [[nodiscard]] bool all_finite() const { return data.allFinite(); }
};

}  // namespace rfclust::nn
