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

#include <algorithm>
#include <numeric>
#include <set>

#include "oracles.hpp"
#include "rfclust/errors.hpp"
#include "rfclust/metrics.hpp"
#include "rfclust/rng.hpp"

using namespace rfclust;
using Eigen::MatrixXd;
using V = std::vector<int>;

namespace {

struct Instance {
  V classes;
  V clusters;
  MatrixXd points;
};

// n <= 50, k <= 5; clusters are compacted to 0..k-1 with every id present.
Instance random_instance(std::uint64_t seed) {
  Rng rng = Rng::derive(seed, "metrics-fuzz");
  const int n = static_cast<int>(rng.integer(6, 50));
  const int k = static_cast<int>(rng.integer(2, 5));
  const int c = static_cast<int>(rng.integer(1, 5));
  Instance in;
  for (int i = 0; i < n; ++i) {
    in.clusters.push_back(i < k ? i : static_cast<int>(rng.below(static_cast<std::uint64_t>(k))));
    in.classes.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(c))));
  }
  rng.shuffle(in.clusters);
  in.points.resize(n, 4);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < 4; ++d) in.points(i, d) = rng.normal() + 3.0 * in.clusters[static_cast<std::size_t>(i)] * (d == 0);
  return in;
}

V permute(const V& labels, std::uint64_t seed) {
  const int m = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<int> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm);
  V out;
  for (int v : labels) out.push_back(perm[static_cast<std::size_t>(v)] + 7);  // offset too: ids are arbitrary
  return out;
}

}  // namespace

TEST_CASE("nmi examples") {
  CHECK(nmi(V{0, 1, 2, 1}, V{0, 1, 2, 1}) == doctest::Approx(1.0));
  CHECK(nmi(V{0, 0, 1, 1}, V{1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(nmi(V{0, 0, 1, 1}, V{0, 1, 0, 1}) == doctest::Approx(0.0));
  CHECK(nmi(V{3, 3, 3}, V{5, 5, 5}) == 1.0);
  CHECK_THROWS_AS((void)nmi(V{0, 1}, V{0}), ShapeError);
}

TEST_CASE("ari examples") {
  CHECK(ari(V{0, 1, 1, 2}, V{0, 1, 1, 2}) == doctest::Approx(1.0));
  CHECK(ari(V{0, 0, 1, 1}, V{0, 1, 0, 1}) == doctest::Approx(-0.5));
  CHECK(oracle::ari(V{0, 0, 1, 1}, V{0, 1, 0, 1}) == doctest::Approx(-0.5));
  CHECK(ari(V{0, 0, 1, 1}, V{4, 4, 4, 4}) == doctest::Approx(0.0));
  CHECK(oracle::ari(V{0, 0, 1, 1}, V{4, 4, 4, 4}) == doctest::Approx(0.0));
  // all-singleton identical partitions
  CHECK(ari(V{0, 1, 2, 3}, V{0, 1, 2, 3}) == 1.0);
  CHECK_THROWS_AS((void)ari(V{0, 1}, V{0, 1, 1}), ShapeError);
}

TEST_CASE("homogeneity and completeness examples") {
  CHECK(homogeneity(V{0, 0, 1, 1, 2}, V{0, 0, 1, 2, 3}) == doctest::Approx(1.0));
  CHECK(homogeneity(V{0, 1, 0, 1}, V{0, 0, 1, 1}) == doctest::Approx(0.0));
  // H(C|K) = 3/4 * H(1/3, 2/3), H(C) = ln 2
  const double h13 = -(std::log(1.0 / 3) / 3 + 2 * std::log(2.0 / 3) / 3);
  CHECK(homogeneity(V{0, 0, 1, 1}, V{0, 0, 0, 1}) == doctest::Approx(1 - 0.75 * h13 / std::log(2.0)));
  CHECK(oracle::homogeneity(V{0, 0, 1, 1}, V{0, 0, 0, 1}) == doctest::Approx(1 - 0.75 * h13 / std::log(2.0)));
  // half the mass in a 50/50 cluster: H(C|K) = ln 2 / 2
  CHECK(homogeneity(V{0, 0, 1, 1}, V{0, 1, 1, 2}) == doctest::Approx(0.5));
  CHECK(oracle::homogeneity(V{0, 0, 1, 1}, V{0, 1, 1, 2}) == doctest::Approx(0.5));
  CHECK(homogeneity(V{2, 2, 2}, V{0, 1, 2}) == 1.0);

  CHECK(completeness(V{0, 0, 1, 1}, V{3, 3, 3, 3}) == 1.0);
  CHECK(completeness(V{0, 0, 1, 1, 2}, V{1, 1, 0, 0, 0}) == doctest::Approx(1.0));
  // class 0 split evenly over two clusters that are otherwise pure
  const V cls{0, 0, 0, 0, 1, 1, 2, 2};
  const V clu{0, 0, 1, 1, 0, 0, 1, 1};
  const double c = completeness(cls, clu);
  CHECK(c > 0.0);
  CHECK(c < 1.0);
  CHECK(std::abs(c - oracle::completeness(cls, clu)) < 1e-9);
}

TEST_CASE("label metrics match brute-force oracles on 200 seeded instances") {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Instance in = random_instance(s);
    CAPTURE(s);
    const double m = nmi(in.classes, in.clusters);
    CHECK(std::abs(m - oracle::nmi(in.classes, in.clusters)) < 1e-9);
    CHECK(std::abs(ari(in.classes, in.clusters) - oracle::ari(in.classes, in.clusters)) < 1e-9);
    CHECK(std::abs(homogeneity(in.classes, in.clusters) - oracle::homogeneity(in.classes, in.clusters)) < 1e-9);
    CHECK(std::abs(completeness(in.classes, in.clusters) - oracle::completeness(in.classes, in.clusters)) < 1e-9);
    CHECK(m >= 0.0);
    CHECK(m <= 1.0 + 1e-12);
    CHECK(ari(in.classes, in.clusters) <= 1.0 + 1e-12);
    CHECK(homogeneity(in.classes, in.clusters) == completeness(in.clusters, in.classes));

    // relabeling invariance
    const V pc = permute(in.clusters, s + 1000);
    const V pk = permute(in.classes, s + 2000);
    CHECK(nmi(pk, pc) == doctest::Approx(m).epsilon(1e-12));
    CHECK(ari(pk, pc) == doctest::Approx(ari(in.classes, in.clusters)).epsilon(1e-12));
    CHECK(homogeneity(pk, pc) == doctest::Approx(homogeneity(in.classes, in.clusters)).epsilon(1e-12));
    CHECK(completeness(pk, pc) == doctest::Approx(completeness(in.classes, in.clusters)).epsilon(1e-12));
  }
}

TEST_CASE("distance metrics match brute-force oracles on 200 seeded instances") {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Instance in = random_instance(s);
    CAPTURE(s);
    const auto n = static_cast<std::size_t>(in.points.rows());
    const double sil = silhouette(in.points, in.clusters, n, s);
    CHECK(std::abs(sil - oracle::silhouette(in.points, in.clusters)) < 1e-9);
    CHECK(sil >= -1.0);
    CHECK(sil <= 1.0);
    const double db = davies_bouldin(in.points, in.clusters);
    CHECK(std::abs(db - oracle::davies_bouldin(in.points, in.clusters)) < 1e-9);
    CHECK(db >= 0.0);
    const double ch = calinski_harabasz(in.points, in.clusters);
    const double ch_ref = oracle::calinski_harabasz(in.points, in.clusters);
    CHECK(std::abs(ch - ch_ref) <= 1e-6 * ch_ref);
    CHECK(ch >= 0.0);
    // cluster ids are arbitrary
    const V pc = permute(in.clusters, s);
    CHECK(silhouette(in.points, pc, n, s) == doctest::Approx(sil).epsilon(1e-12));
    CHECK(davies_bouldin(in.points, pc) == doctest::Approx(db).epsilon(1e-12));
  }
}

TEST_CASE("silhouette examples") {
  double prev = -1.0;
  for (double sep : {2.0, 10.0, 100.0, 1000.0}) {
    MatrixXd p(4, 1);
    p << 0, 0.1, sep, sep + 0.1;
    const double s = silhouette(p, V{0, 0, 1, 1});
    CHECK(s > prev);
    prev = s;
  }
  CHECK(prev > 0.999);

  MatrixXd line(2, 1);
  line << 0, 1;
  CHECK(silhouette(line, V{0, 1}) == 0.0);
  CHECK_THROWS_AS((void)silhouette(line, V{0, 0}), UndefinedMetricError);
}

TEST_CASE("silhouette subsample is seeded and bounded") {
  const Instance in = random_instance(3);
  const double a = silhouette(in.points, in.clusters, 5, 11);
  CHECK(a == silhouette(in.points, in.clusters, 5, 11));
  CHECK(a >= -1.0);
  CHECK(a <= 1.0);
}

TEST_CASE("davies_bouldin examples") {
  MatrixXd p(4, 2);
  p << 0, 0, 0, 0, 1, 0, 1, 0;
  CHECK(davies_bouldin(p, V{0, 0, 1, 1}) == doctest::Approx(0.0));

  // two clusters of radius r (points at +-r around centers 0 and D)
  const double r = 0.5, d = 4.0;
  MatrixXd q(4, 1);
  q << -r, r, d - r, d + r;
  CHECK(davies_bouldin(q, V{0, 0, 1, 1}) == doctest::Approx(2 * r / d));

  bool degenerate = false;
  MatrixXd same(4, 1);
  same << -1, 1, -2, 2;
  const double v = davies_bouldin(same, V{0, 0, 1, 1}, &degenerate);
  CHECK(degenerate);
  CHECK(std::isfinite(v));
}

TEST_CASE("calinski_harabasz examples") {
  MatrixXd p(4, 1);
  p << 1, 1, 5, 5;
  bool capped = false;
  CHECK(calinski_harabasz(p, V{0, 0, 1, 1}, &capped) == kCalinskiHarabaszCap);
  CHECK(capped);

  // isotropic blob split arbitrarily in half
  Rng rng(4);
  double total = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXd g(200, 10);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    V split;
    for (int i = 0; i < 200; ++i) split.push_back(static_cast<int>(rng.below(2)));
    total += calinski_harabasz(g, split);
  }
  CHECK(total / 20 < 1.5);

  CHECK_THROWS_AS((void)calinski_harabasz(p, V{0, 0, 0, 0}), UndefinedMetricError);
  CHECK_THROWS_AS((void)calinski_harabasz(p, V{0, 1, 2, 3}), UndefinedMetricError);
}

TEST_CASE("per_class_prf examples") {
  {
    const auto s = per_class_prf(V{0, 1, 2, 1}, V{0, 1, 2, 1}, 3);
    for (const auto& c : s) {
      CHECK(c.precision == 1.0);
      CHECK(c.recall == 1.0);
      CHECK(c.f1 == 1.0);
    }
  }
  {
    // class 0: TP=8, FP=2, FN=4
    V truth, pred;
    for (int i = 0; i < 8; ++i) truth.push_back(0), pred.push_back(0);
    for (int i = 0; i < 2; ++i) truth.push_back(1), pred.push_back(0);
    for (int i = 0; i < 4; ++i) truth.push_back(0), pred.push_back(1);
    const auto s = per_class_prf(truth, pred, 2);
    CHECK(s[0].precision == doctest::Approx(0.8));
    CHECK(s[0].recall == doctest::Approx(2.0 / 3.0));
    CHECK(s[0].f1 == doctest::Approx(8.0 / 11.0));
    CHECK(s[0].support == 12);
    CHECK(s[0].predicted_positives == 10);
  }
  {
    // P = 0.99, R = 1
    V truth, pred;
    for (int i = 0; i < 99; ++i) truth.push_back(0), pred.push_back(0);
    truth.push_back(1), pred.push_back(0);
    const auto s = per_class_prf(truth, pred, 2);
    CHECK(s[0].precision == doctest::Approx(0.99));
    CHECK(s[0].recall == 1.0);
    CHECK(s[0].f1 == doctest::Approx(2 * 0.99 / 1.99));
    CHECK(s[1].no_predictions);
    CHECK(s[1].precision == 0.0);
  }
  {
    // a row printed as P 0.99 / R 1.00 / F1 1.00 at two decimals: P = 0.994
    V truth, pred;
    for (int i = 0; i < 497; ++i) truth.push_back(0), pred.push_back(0);
    for (int i = 0; i < 3; ++i) truth.push_back(1), pred.push_back(0);
    const auto s = per_class_prf(truth, pred, 2);
    CHECK(std::round(s[0].precision * 100) / 100 == doctest::Approx(0.99));
    CHECK(std::round(s[0].recall * 100) / 100 == doctest::Approx(1.00));
    CHECK(std::round(s[0].f1 * 100) / 100 == doctest::Approx(1.00));
  }
  {
    // unmapped predictions only count as misses
    const auto s = per_class_prf(V{0, 0, 1}, V{0, -1, 1}, 2);
    CHECK(s[0].recall == doctest::Approx(0.5));
    CHECK(s[0].precision == 1.0);
  }
}

TEST_CASE("contingency marginals") {
  const Instance in = random_instance(9);
  const ContingencyTable t = contingency(in.classes, in.clusters);
  CHECK(t.n == static_cast<std::int64_t>(in.classes.size()));
  CHECK(t.counts.sum() == t.n);
  CHECK((t.counts.rowwise().sum() - t.class_totals).cwiseAbs().maxCoeff() == 0);
  CHECK((t.counts.colwise().sum().transpose() - t.cluster_totals).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("cluster_averages") {
  Dataset ds;
  for (double v : {0.0, 2.0, 5.0, 5.0}) {
    Sweep s;
    s.bins.setConstant(static_cast<float>(v));
    ds.sweeps.push_back(s);
  }
  const ClusterAverages avg = cluster_averages(ds, V{0, 0, 2, 2}, 3);
  CHECK(avg.counts == std::vector<std::size_t>{2, 0, 2});
  REQUIRE(avg.means[0].has_value());
  CHECK((avg.means[0]->array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK_FALSE(avg.means[1].has_value());
  CHECK((avg.means[2]->array() - 5.0).abs().maxCoeff() < 1e-12);
  CHECK(std::accumulate(avg.counts.begin(), avg.counts.end(), std::size_t{0}) == ds.size());

  // normalized bins are reported in dB
  ds.norm_stats = NormStats{10.0, 2.0};
  const ClusterAverages db = cluster_averages(ds, V{0, 0, 1, 1}, 2);
  CHECK((db.means[0]->array() - 12.0).abs().maxCoeff() < 1e-9);
  CHECK((db.means[1]->array() - 20.0).abs().maxCoeff() < 1e-9);
}

TEST_CASE("dominant classes and the pure-cluster composition") {
  const V classes{0, 0, 0, 1, 1, 2, 2, 2, 2, 2};
  const V mixed{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};  // cluster 0: 60/40
  CHECK(dominant_classes(classes, mixed, 3, 3) == V{0, 2, -1});
  CHECK(dominant_classes(V{0, 1}, V{0, 0}, 1, 2) == V{0});  // tie -> lowest

  const V pure{2, 2, 2, 0, 0, 1, 1, 1, 1, 1};
  const auto dom = dominant_classes(classes, pure, 3, 3);
  CHECK(dom == V{1, 2, 0});
  V predicted;
  for (int c : pure) predicted.push_back(dom[static_cast<std::size_t>(c)]);
  for (const auto& s : per_class_prf(classes, predicted, 3)) CHECK(s.f1 == 1.0);

  const LabelMap m = dominant_label_map(classes, mixed, {"wifi", "lte", "dvbt"}, 3);
  CHECK(m.label(0) == "wifi");
  CHECK(m.label(1) == "dvbt");
  CHECK(m.label(2) == kUnmapped);
}

TEST_CASE("evaluate assembles a consistent report") {
  const Instance in = random_instance(17);
  const int k = *std::max_element(in.clusters.begin(), in.clusters.end()) + 1;
  const int c = *std::max_element(in.classes.begin(), in.classes.end()) + 1;
  std::vector<std::string> names;
  for (int i = 0; i < c; ++i) names.push_back("c" + std::to_string(i));
  const MetricsReport r = evaluate(in.points, in.clusters, k, &in.classes, names);
  CHECK(r.labeled);
  CHECK(r.nmi == nmi(in.classes, in.clusters));
  CHECK(r.ari == ari(in.classes, in.clusters));
  CHECK(r.davies_bouldin == davies_bouldin(in.points, in.clusters));
  CHECK(r.per_class.size() == names.size());
  const auto j = r.to_json();
  CHECK(j.at("labels").at("nmi").get<double>() == r.nmi);
  CHECK(j.at("distance").contains("calinski_harabasz"));
  CHECK(j.at("per_class").size() == names.size());

  const MetricsReport u = evaluate(in.points, in.clusters, k, nullptr, {});
  CHECK_FALSE(u.labeled);
  CHECK_FALSE(u.to_json().contains("labels"));
}
