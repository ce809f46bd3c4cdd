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

#include <fstream>
#include <numeric>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rfclust/errors.hpp"
#include "rfclust/metrics.hpp"
#include "rfclust/rng.hpp"

using namespace rfclust;
using nlohmann::json;

namespace {

std::vector<std::uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

bool same_network(const Model& a, const Model& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& la = a.layers[i];
    const auto& lb = b.layers[i];
    for (std::size_t p = 0; p < la.params.size(); ++p)
      if (!(la.params[p].value.array() == lb.params[p].value.array()).all()) return false;
    if (la.spec.kind == nn::LayerKind::BatchNorm1d) {
      if (!(la.running_mean.array() == lb.running_mean.array()).all()) return false;
      if (!(la.running_var.array() == lb.running_var.array()).all()) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("base64 test vectors and round trip") {
  CHECK(base64_encode(bytes_of("")) == "");
  CHECK(base64_encode(bytes_of("f")) == "Zg==");
  CHECK(base64_encode(bytes_of("fo")) == "Zm8=");
  CHECK(base64_encode(bytes_of("foo")) == "Zm9v");
  CHECK(base64_encode(bytes_of("foob")) == "Zm9vYg==");
  CHECK(base64_encode(bytes_of("fooba")) == "Zm9vYmE=");
  CHECK(base64_encode(bytes_of("foobar")) == "Zm9vYmFy");
  CHECK(base64_decode("Zm9vYmE=") == bytes_of("fooba"));

  Rng rng(1);
  for (int len = 0; len < 70; ++len) {
    std::vector<std::uint8_t> b;
    for (int i = 0; i < len; ++i) b.push_back(static_cast<std::uint8_t>(rng.below(256)));
    CHECK(base64_decode(base64_encode(b)) == b);
  }
  CHECK_THROWS_AS((void)base64_decode("Zm9"), ParseError);
  CHECK_THROWS_AS((void)base64_decode("Zm9v!A=="), ParseError);
  CHECK_THROWS_AS((void)base64_decode("Z=9v"), ParseError);
}

TEST_CASE("SSDC artifact round trip through a file") {
  const auto t = fixture::ssdc();
  const ModelArtifact& a = t.artifact;
  CHECK(a.meta.train_size == t.train.size());
  CHECK(a.meta.dataset_fingerprint.size() == 16);
  CHECK(a.meta.epochs == 1);
  CHECK(a.model.clusters.pca.input_dim() == 512);
  CHECK(a.model.clusters.pca.output_dim() == 10);
  CHECK(a.model.clusters.dim() == 10);

  // stored statistics equal cluster_averages under the final labels
  const ClusterAverages avg = cluster_averages(t.train, t.report.final_labels, a.model.clusters.k());
  CHECK(a.stats.counts == avg.counts);
  CHECK(std::accumulate(a.stats.counts.begin(), a.stats.counts.end(), std::size_t{0}) == t.train.size());
  for (std::size_t k = 0; k < avg.means.size(); ++k) {
    REQUIRE(a.stats.averages_db[k].has_value() == avg.means[k].has_value());
    if (avg.means[k]) CHECK((*a.stats.averages_db[k] - *avg.means[k]).cwiseAbs().maxCoeff() == 0.0);
  }

  testutil::TempDir dir("artifact");
  save_artifact(a, dir / "model.json");
  const ModelArtifact b = load_artifact(dir / "model.json");
  CHECK(same_network(a.model.network, b.model.network));
  CHECK(b.model.variant == Variant::Ssdc);
  CHECK(b.model.norm_stats->mean == a.model.norm_stats->mean);
  CHECK(b.model.norm_stats->std == a.model.norm_stats->std);
  CHECK((b.model.clusters.centroids.array() == a.model.clusters.centroids.array()).all());
  CHECK((b.model.clusters.pca.components.array() == a.model.clusters.pca.components.array()).all());
  CHECK((b.model.clusters.pca.mean.array() == a.model.clusters.pca.mean.array()).all());
  CHECK(b.meta.dataset_fingerprint == a.meta.dataset_fingerprint);
  CHECK(b.meta.trained_at == a.meta.trained_at);
  CHECK(b.meta.config == a.meta.config);
  CHECK(b.stats.counts == a.stats.counts);

  const LabelMap none;
  for (std::size_t i = 0; i < t.raw.size(); i += 5) {
    const Prediction pa = predict(a.model, none, t.raw.sweeps[i].bins);
    const Prediction pb = predict(b.model, none, t.raw.sweeps[i].bins);
    CHECK(pa.cluster_id == pb.cluster_id);
    CHECK(pa.confidence == pb.confidence);
    CHECK((pa.embedding.array() == pb.embedding.array()).all());
  }

  const json doc = artifact_to_json(a);
  CHECK(doc.at("param_count").get<std::int64_t>() == 128406);
  CHECK(doc.at("variant") == "ssdc");
  CHECK(artifact_to_json(artifact_from_json(doc)) == doc);
}

TEST_CASE("DCEC artifact keeps the 10-d bottleneck basis") {
  const auto t = fixture::dcec();
  const json doc = artifact_to_json(t.artifact);
  CHECK(doc.at("param_count").get<std::int64_t>() == 162827);
  const ModelArtifact b = artifact_from_json(doc);
  CHECK(b.model.variant == Variant::Dcec);
  CHECK(b.model.clusters.pca.input_dim() == 10);
  CHECK(b.model.clusters.pca.output_dim() == 10);
  CHECK(same_network(t.artifact.model.network, b.model.network));
  const Prediction p = predict(b.model, LabelMap{}, t.raw.sweeps[0].bins);
  CHECK(p.cluster_id == t.report.final_labels[0]);
}

TEST_CASE("integrity errors") {
  const auto t = fixture::ssdc(4, 40);
  const json good = artifact_to_json(t.artifact);

  auto expect_integrity = [](const json& doc, const std::string& needle) {
    try {
      (void)artifact_from_json(doc);
      FAIL("expected IntegrityError mentioning " << needle);
    } catch (const IntegrityError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
    }
  };

  json d = good;
  d["param_count"] = 128406 + 1;
  expect_integrity(d, "parameter count");

  d = good;
  d["format_version"] = 99;
  expect_integrity(d, "version");

  d = good;
  d["format"] = "something-else";
  expect_integrity(d, "not an rfclust model");

  d = good;
  d["layers"][0]["params"][0]["data"] = base64_encode(std::vector<std::uint8_t>(8, 0));
  expect_integrity(d, "layer 0");

  d = good;
  d.erase("norm_stats");
  expect_integrity(d, "norm");

  d = good;
  d["clusters"]["dim"] = 9;
  expect_integrity(d, "centroids");

  d = good;
  d["stats"]["counts"].erase(0);
  expect_integrity(d, "statistics");

  d = good;
  d.erase("pca");
  expect_integrity(d, "malformed");

  testutil::TempDir dir("artifact-bad");
  {
    std::ofstream out(dir / "trunc.json");
    const std::string text = good.dump();
    out << text.substr(0, text.size() / 2);
  }
  CHECK_THROWS_AS((void)load_artifact(dir / "trunc.json"), IntegrityError);
  CHECK_THROWS_AS((void)load_artifact(dir / "missing.json"), IoError);
}

TEST_CASE("run report document") {
  const auto t = fixture::ssdc(4, 41);
  const json r = train_report_to_json(t.report, {{"epochs", 1}});
  CHECK(r.at("variant") == "ssdc");
  CHECK(r.at("rounds") == 1);
  CHECK(r.at("epochs").size() == 1);
  CHECK(r.at("epochs")[0].at("phase") == "ssdc");

  const auto a = fixture::dcec(3, 42);
  const json ra = train_report_to_json(a.report, json::object());
  CHECK(ra.at("pretrain_epochs") == 1);
  CHECK(ra.at("joint_epochs") == 1);
}
