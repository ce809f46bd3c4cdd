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
#include <filesystem>

#include <json.hpp>

#include "rfclust/autoencoder.hpp"
#include "rfclust/model.hpp"
#include "rfclust/ssdc.hpp"

namespace rfclust {

/// Training parameters of one run. Built-in values are the published
/// defaults; a config document overrides them and command-line flags
/// override the document. The effective config is echoed into every report
/// and can be fed back with --config to reproduce a run.
struct RunConfig {
  Variant arch = Variant::Ssdc;
  std::uint64_t seed = 0;
  int k = 10;
  int embed_dim = 10;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  double weight_decay = 1e-5;
  // ssdc
  int epochs = 250;
  bool reinit_head = true;
  bool refit_pca = true;
  bool reset_bn = false;
  // autoencoders
  int pretrain_epochs = 200;
  int joint_epochs = 50;
  double alpha = 1.0;
  double beta = 1.0;
  double margin = 1.0;
  bool target_per_batch = false;

  [[nodiscard]] nlohmann::json to_json() const;
  /// Overrides fields present in `doc`; unknown keys throw ConfigError.
  void merge(const nlohmann::json& doc);
  static RunConfig load(const std::filesystem::path& path);

  [[nodiscard]] TrainConfig ssdc_config() const;
  [[nodiscard]] AeConfig ae_config() const;
};

}  // namespace rfclust
