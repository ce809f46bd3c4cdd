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

#include "rfclust/nn/network.hpp"

namespace rfclust::nn {

std::string_view to_string(Architecture arch) { return arch == Architecture::Ssdc ? "ssdc" : "ae"; }

Architecture parse_architecture(std::string_view name) {
  if (name == "ssdc") return Architecture::Ssdc;
  if (name == "ae") return Architecture::Ae;
  throw ParseError("unknown architecture '" + std::string(name) + "'");
}

std::vector<LayerSpec> encoder_specs() {
  std::vector<LayerSpec> specs;
  Index in = 1;
  for (Index out : {16, 32, 64, 128}) {
    specs.push_back(LayerSpec::conv1d(in, out, 7, 1, 3));
    specs.push_back(LayerSpec::batchnorm1d(out));
    specs.push_back(LayerSpec::maxpool1d(4));
    specs.push_back(LayerSpec::relu());
    in = out;
  }
  specs.push_back(LayerSpec::flatten());
  return specs;
}

std::vector<LayerSpec> ssdc_specs(int num_clusters) {
  auto specs = encoder_specs();
  specs.push_back(LayerSpec::linear(512, 100));
  specs.push_back(LayerSpec::relu());
  specs.push_back(LayerSpec::linear(100, num_clusters));
  return specs;
}

std::vector<LayerSpec> ae_specs(int embed_dim) {
  auto specs = encoder_specs();
  specs.push_back(LayerSpec::linear(512, embed_dim));
  specs.push_back(LayerSpec::linear(embed_dim, 512));
  specs.push_back(LayerSpec::unflatten(128, 4));
  // (L - 1) * 4 - 2 * 2 + 7 + 1 = 4L
  Index in = 128;
  for (Index out : {64, 32, 16, 1}) {
    specs.push_back(LayerSpec::batchnorm1d(in));
    specs.push_back(LayerSpec::relu());
    specs.push_back(LayerSpec::conv_transpose1d(in, out, 7, 4, 2, 1));
    in = out;
  }
  return specs;
}

ComplexityReport complexity_report(const std::vector<LayerSpec>& specs, Shape input) {
  ComplexityReport r;
  Shape shape = input;
  double flops = 0.0;
  for (const auto& s : specs) {
    r.trainable_params += s.param_count();
    flops += s.forward_flops(shape);
    shape = s.output_shape(shape);
  }
  r.forward_gflops = flops * 1e-9;
  return r;
}

}  // namespace rfclust::nn
