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

#include <doctest.h>

#include "rfclust/autoencoder.hpp"
#include "rfclust/nn/gradcheck.hpp"
#include "rfclust/ssdc.hpp"

using namespace rfclust;
using namespace rfclust::nn;

namespace {

std::int64_t count_by_identity(const std::vector<LayerSpec>& specs) {
  std::int64_t n = 0;
  for (const auto& s : specs) {
    switch (s.kind) {
      case LayerKind::Conv1d: n += s.out_channels * (s.in_channels * 7 + 1); break;
      case LayerKind::ConvTranspose1d: n += s.in_channels * s.out_channels * 7 + s.out_channels; break;
      case LayerKind::BatchNorm1d: n += 2 * s.in_channels; break;
      case LayerKind::Linear: n += s.out_features * (s.in_features + 1); break;
      default: break;
    }
  }
  return n;
}

}  // namespace

TEST_CASE("parameter counts") {
  CHECK(build_ssdc(10, 0).param_count() == 128406);
  CHECK(complexity_report(build_ssdc(10, 0)).trainable_params == 128406);
  CHECK(build_ssdc(3, 0).param_count() == 128406 - 7 * 101);
  CHECK(build_ae(0).param_count() == 162827);
  CHECK(complexity_report(build_ae(0)).trainable_params == 162827);

  // closed-form identities, term by term
  CHECK(count_by_identity(encoder_specs()) == 76096);
  CHECK(count_by_identity(ssdc_specs(10)) == 76096 + 51300 + 1010);
  CHECK(count_by_identity(ae_specs()) == 76096 + 5130 + 5632 + 480 + 75489);
  for (const auto& s : ae_specs()) CHECK(s.param_count() >= 0);
}

TEST_CASE("shape pipeline 1x1024 -> 512 and AE reconstruction shape") {
  Shape shape = kInputShape;
  std::vector<Shape> after_pool;
  for (const auto& s : encoder_specs()) {
    shape = s.output_shape(shape);
    if (s.kind == LayerKind::MaxPool1d) after_pool.push_back(shape);
  }
  REQUIRE(after_pool.size() == 4);
  CHECK(after_pool[0] == Shape{16, 256});
  CHECK(after_pool[1] == Shape{32, 64});
  CHECK(after_pool[2] == Shape{64, 16});
  CHECK(after_pool[3] == Shape{128, 4});
  CHECK(shape == Shape{512, 1});

  const Model ae = build_ae(1);
  Tensor<float> x(2, 1, 1024);
  x.data.setRandom();
  const Tensor<float> y = ae.infer(x, 0, ae.size());
  CHECK(y.shape() == Shape{1, 1024});
  CHECK(y.batch == 2);
  CHECK(ae.infer(x, 0, ae.embedding_end).shape() == Shape{10, 1});

  const Model ssdc = build_ssdc(10, 1);
  CHECK(ssdc.infer(x, 0, ssdc.embedding_end).shape() == Shape{512, 1});
  CHECK(ssdc.infer(x, 0, ssdc.size()).shape() == Shape{10, 1});
}

TEST_CASE("forward FLOPs ratio AE / SSDC") {
  const double ssdc = complexity_report(ssdc_specs(10)).forward_gflops;
  const double ae = complexity_report(ae_specs()).forward_gflops;
  // Hand count (MAC = 2, single sample): conv stack
  //   2 * 7 * (1*16*1024 + 16*32*256 + 32*64*64 + 64*128*16) = 4,358,144
  // heads 2 * (512*100 + 100*10) and 2 * (512*10 + 10*512); transposed convs
  // over output length 2 * 7 * (128*64*16 + 64*32*64 + 32*16*256 + 16*1*1024).
  const double conv = 2.0 * 7 * (1 * 16 * 1024 + 16 * 32 * 256 + 32 * 64 * 64 + 64 * 128 * 16);
  const double head = 2.0 * (512 * 100 + 100 * 10);
  const double bottleneck = 2.0 * (512 * 10 + 10 * 512);
  const double tconv = 2.0 * 7 * (128 * 64 * 16 + 64 * 32 * 64 + 32 * 16 * 256 + 16 * 1 * 1024);
  CHECK(ssdc * 1e9 == doctest::Approx(conv + head).epsilon(1e-12));
  CHECK(ae * 1e9 == doctest::Approx(conv + bottleneck + tconv).epsilon(1e-12));
  const double ratio = ae / ssdc;
  CHECK(ratio >= 1.90);
  CHECK(ratio <= 2.00);
}

TEST_CASE("builds are seed-deterministic") {
  const Model a = build_ssdc(10, 9);
  const Model b = build_ssdc(10, 9);
  const Model c = build_ssdc(10, 10);
  bool same = true, differ = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t p = 0; p < a.layers[i].params.size(); ++p) {
      same = same && (a.layers[i].params[p].value.array() == b.layers[i].params[p].value.array()).all();
      differ = differ || !(a.layers[i].params[p].value.array() == c.layers[i].params[p].value.array()).all();
    }
  }
  CHECK(same);
  CHECK(differ);
  CHECK_THROWS_AS((void)build_ssdc(1, 0), ConfigError);
}

TEST_CASE("eval forward is bit-identical across calls and AE encoder matches SSDC encoder") {
  Model ssdc = build_ssdc(10, 3);
  Model ae = build_ae(4);
  for (std::size_t i = 0; i < ssdc.encoder_end; ++i) ae.layers[i] = ssdc.layers[i];
  Tensor<float> x(3, 1, 1024);
  x.data.setRandom();
  const Tensor<float> a = ssdc.infer(x, 0, ssdc.encoder_end);
  const Tensor<float> b = ssdc.infer(x, 0, ssdc.encoder_end);
  const Tensor<float> c = ae.infer(x, 0, ae.encoder_end);
  CHECK((a.data.array() == b.data.array()).all());
  CHECK((a.data.array() == c.data.array()).all());
  const Tensor<float> d = ssdc.forward(x, Mode::Eval, 0, ssdc.encoder_end);
  CHECK((a.data.array() == d.data.array()).all());
}

TEST_CASE("grad_check: full networks end to end") {
  GradCheckOptions opt;
  opt.max_entries = 8;
  opt.seed = 21;

  SUBCASE("SSDC forward + cross-entropy, batch 4") {
    Network<double> net = make_ssdc<double>(10, 5);
    const Tensor<double> x = random_input(4, kInputShape, 6);
    const std::vector<int> targets{1, 7, 7, 0};
    const GradCheckResult r = grad_check(
        net, x, [&](const Tensor<double>& y) { return softmax_cross_entropy(y, targets); }, opt);
    CAPTURE(r.worst);
    CHECK(r.checked > 100);
    CHECK(r.skipped * 4 < r.checked);
    CHECK(r.max_rel_error < 1e-3);
  }
  SUBCASE("AE forward + reconstruction MSE, batch 3") {
    Network<double> net = make_ae<double>(10, 7);
    const Tensor<double> x = random_input(3, kInputShape, 8);
    const GradCheckResult r =
        grad_check(net, x, [&](const Tensor<double>& y) { return mse_loss(x, y); }, opt);
    CAPTURE(r.worst);
    CHECK(r.checked > 100);
    CHECK(r.skipped * 4 < r.checked);
    CHECK(r.max_rel_error < 1e-3);
  }
}

TEST_CASE("grad_check skips probes that straddle a maxpool switch") {
  // Two window entries 1e-7 apart: a +-1e-4 probe flips the argmax.
  Network<double> net;
  net.layers.emplace_back(LayerSpec::maxpool1d(4));
  Tensor<double> x(1, 1, 4);
  x.data << 0.3, 0.5, 0.5 - 1e-7, -0.2;
  const auto r = grad_check(net, x, random_projection_loss({1, 1}, 1, 3));
  CHECK(r.skipped == 2);
  CHECK(r.checked == 2);
  CHECK(r.max_rel_error < 1e-9);
}
