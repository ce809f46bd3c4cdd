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

// Small trained models shared by the artifact and service tests.

#pragma once

#include "rfclust/artifact.hpp"
#include "rfclust/autoencoder.hpp"
#include "rfclust/ssdc.hpp"

namespace fixture {

struct Trained {
  rfclust::Dataset raw;
  rfclust::Dataset train;
  rfclust::TrainReport report;
  rfclust::ModelArtifact artifact;
};

inline Trained ssdc(int k = 10, std::uint64_t seed = 31) {
  Trained t;
  t.raw = rfclust::synth_generate(rfclust::default_profile(3, seed), 12);
  t.train = rfclust::normalize_dataset(t.raw);
  rfclust::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 16;
  cfg.num_clusters = k;
  cfg.seed = seed;
  t.report = rfclust::train_ssdc(t.train, cfg);
  t.artifact = rfclust::make_artifact(t.report, t.train, seed, {{"epochs", 1}});
  return t;
}

inline Trained dcec(int k = 4, std::uint64_t seed = 32) {
  Trained t;
  t.raw = rfclust::synth_generate(rfclust::default_profile(2, seed), 10);
  t.train = rfclust::normalize_dataset(t.raw);
  rfclust::AeConfig cfg;
  cfg.variant = rfclust::Variant::Dcec;
  cfg.pretrain_epochs = 1;
  cfg.joint_epochs = 1;
  cfg.batch_size = 8;
  cfg.num_clusters = k;
  cfg.seed = seed;
  t.report = rfclust::train_ae(t.train, cfg);
  t.artifact = rfclust::make_artifact(t.report, t.train, seed);
  return t;
}

inline std::string fft_body(const rfclust::SweepVector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(static_cast<double>(v(i)));
  return nlohmann::json{{"fft", arr}}.dump();
}

}  // namespace fixture
