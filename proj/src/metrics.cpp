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

#include "rfclust/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "rfclust/clustering.hpp"
#include "rfclust/errors.hpp"
#include "rfclust/rng.hpp"

namespace rfclust {

namespace {

void check_lengths(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) {
    throw ShapeError("label vectors differ in length: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
}

void check_points(const Eigen::MatrixXd& points, std::span<const int> clusters) {
  if (static_cast<std::size_t>(points.rows()) != clusters.size()) {
    throw ShapeError("points and cluster labels differ in length");
  }
}

// Maps arbitrary label values to 0..m-1 in ascending order.
std::vector<int> compact(std::span<const int> labels, int* count) {
  std::map<int, int> ids;
  for (int v : labels) ids.emplace(v, 0);
  int next = 0;
  for (auto& [v, id] : ids) id = next++;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = ids[labels[i]];
  *count = next;
  return out;
}

double entropy(const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>& totals, double n) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < totals.size(); ++i) {
    if (totals(i) > 0) {
      const double p = static_cast<double>(totals(i)) / n;
      h -= p * std::log(p);
    }
  }
  return h;
}

double mutual_information(const ContingencyTable& t) {
  const auto n = static_cast<double>(t.n);
  double mi = 0.0;
  for (Eigen::Index c = 0; c < t.counts.rows(); ++c) {
    for (Eigen::Index k = 0; k < t.counts.cols(); ++k) {
      const auto nck = static_cast<double>(t.counts(c, k));
      if (nck == 0.0) continue;
      mi += nck / n *
            std::log(nck * n / (static_cast<double>(t.class_totals(c)) * static_cast<double>(t.cluster_totals(k))));
    }
  }
  return std::max(mi, 0.0);
}

// H(rows | cols) of the table.
double conditional_entropy(const ContingencyTable& t) {
  const auto n = static_cast<double>(t.n);
  double h = 0.0;
  for (Eigen::Index c = 0; c < t.counts.rows(); ++c) {
    for (Eigen::Index k = 0; k < t.counts.cols(); ++k) {
      const auto nck = static_cast<double>(t.counts(c, k));
      if (nck > 0.0) h -= nck / n * std::log(nck / static_cast<double>(t.cluster_totals(k)));
    }
  }
  return std::max(h, 0.0);
}

double comb2(std::int64_t v) { return static_cast<double>(v) * static_cast<double>(v - 1) / 2.0; }

struct Groups {
  int k = 0;
  std::vector<int> ids;
  std::vector<std::size_t> sizes;
  Eigen::MatrixXd centroids;
};

Groups group(const Eigen::MatrixXd& points, std::span<const int> clusters) {
  Groups g;
  g.ids = compact(clusters, &g.k);
  g.sizes.assign(static_cast<std::size_t>(g.k), 0);
  g.centroids = Eigen::MatrixXd::Zero(g.k, points.cols());
  for (std::size_t i = 0; i < g.ids.size(); ++i) {
    ++g.sizes[static_cast<std::size_t>(g.ids[i])];
    g.centroids.row(g.ids[i]) += points.row(static_cast<Eigen::Index>(i));
  }
  for (int c = 0; c < g.k; ++c) g.centroids.row(c) /= static_cast<double>(g.sizes[static_cast<std::size_t>(c)]);
  return g;
}

}  // namespace

ContingencyTable contingency(std::span<const int> classes, std::span<const int> clusters) {
  check_lengths(classes, clusters);
  int nc = 0;
  int nk = 0;
  const auto ci = compact(classes, &nc);
  const auto ki = compact(clusters, &nk);
  ContingencyTable t;
  t.counts.setZero(nc, nk);
  for (std::size_t i = 0; i < ci.size(); ++i) ++t.counts(ci[i], ki[i]);
  t.class_totals = t.counts.rowwise().sum();
  t.cluster_totals = t.counts.colwise().sum().transpose();
  t.n = static_cast<std::int64_t>(ci.size());
  return t;
}

double nmi(std::span<const int> classes, std::span<const int> clusters) {
  check_lengths(classes, clusters);
  if (classes.empty()) throw PreconditionError("nmi needs at least one sample");
  const ContingencyTable t = contingency(classes, clusters);
  const auto n = static_cast<double>(t.n);
  const double hu = entropy(t.class_totals, n);
  const double hv = entropy(t.cluster_totals, n);
  if (hu + hv == 0.0) return 1.0;
  return std::clamp(2.0 * mutual_information(t) / (hu + hv), 0.0, 1.0);
}

double ari(std::span<const int> classes, std::span<const int> clusters) {
  check_lengths(classes, clusters);
  if (classes.size() < 2) throw PreconditionError("ari needs at least two samples");
  const ContingencyTable t = contingency(classes, clusters);
  double index = 0.0;
  for (Eigen::Index i = 0; i < t.counts.size(); ++i) index += comb2(t.counts.data()[i]);
  double a = 0.0;
  double b = 0.0;
  for (Eigen::Index i = 0; i < t.class_totals.size(); ++i) a += comb2(t.class_totals(i));
  for (Eigen::Index i = 0; i < t.cluster_totals.size(); ++i) b += comb2(t.cluster_totals(i));
  const double expected = a * b / comb2(t.n);
  const double max_index = 0.5 * (a + b);
  // Zero denominator only when both partitions are the same trivial one.
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

double homogeneity(std::span<const int> classes, std::span<const int> clusters) {
  check_lengths(classes, clusters);
  if (classes.empty()) return 1.0;
  const ContingencyTable t = contingency(classes, clusters);
  const double hc = entropy(t.class_totals, static_cast<double>(t.n));
  if (hc == 0.0) return 1.0;
  return std::clamp(1.0 - conditional_entropy(t) / hc, 0.0, 1.0);
}

double completeness(std::span<const int> classes, std::span<const int> clusters) {
  return homogeneity(clusters, classes);
}

double silhouette(const Eigen::MatrixXd& points, std::span<const int> clusters, std::size_t max_points,
                  std::uint64_t seed) {
  check_points(points, clusters);
  const Groups g = group(points, clusters);
  if (g.k < 2) throw UndefinedMetricError("silhouette needs at least two clusters");
  const std::size_t n = g.ids.size();

  std::vector<std::size_t> sample(n);
  std::iota(sample.begin(), sample.end(), std::size_t{0});
  if (max_points > 0 && n > max_points) {
    Rng rng = Rng::derive(seed, "silhouette");
    rng.shuffle(sample);
    sample.resize(max_points);
    std::sort(sample.begin(), sample.end());
  }

  std::vector<double> dist_sum(static_cast<std::size_t>(g.k));
  double total = 0.0;
  for (std::size_t i : sample) {
    const int own = g.ids[i];
    if (g.sizes[static_cast<std::size_t>(own)] == 1) continue;  // s(i) = 0
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    const auto pi = points.row(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist_sum[static_cast<std::size_t>(g.ids[j])] += (pi - points.row(static_cast<Eigen::Index>(j))).norm();
    }
    const double a = dist_sum[static_cast<std::size_t>(own)] / static_cast<double>(g.sizes[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < g.k; ++c) {
      if (c != own) b = std::min(b, dist_sum[static_cast<std::size_t>(c)] / static_cast<double>(g.sizes[static_cast<std::size_t>(c)]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(sample.size());
}

double davies_bouldin(const Eigen::MatrixXd& points, std::span<const int> clusters, bool* degenerate) {
  check_points(points, clusters);
  const Groups g = group(points, clusters);
  if (g.k < 2) throw UndefinedMetricError("Davies-Bouldin needs at least two clusters");
  Eigen::VectorXd scatter = Eigen::VectorXd::Zero(g.k);
  for (std::size_t i = 0; i < g.ids.size(); ++i) {
    scatter(g.ids[i]) += (points.row(static_cast<Eigen::Index>(i)) - g.centroids.row(g.ids[i])).norm();
  }
  for (int c = 0; c < g.k; ++c) scatter(c) /= static_cast<double>(g.sizes[static_cast<std::size_t>(c)]);

  bool clamped = false;
  double total = 0.0;
  for (int i = 0; i < g.k; ++i) {
    double worst = 0.0;
    for (int j = 0; j < g.k; ++j) {
      if (j == i) continue;
      double d = (g.centroids.row(i) - g.centroids.row(j)).norm();
      if (d < 1e-12) {
        d = 1e-12;
        clamped = true;
      }
      worst = std::max(worst, (scatter(i) + scatter(j)) / d);
    }
    total += worst;
  }
  if (degenerate) *degenerate = clamped;
  return total / g.k;
}

double calinski_harabasz(const Eigen::MatrixXd& points, std::span<const int> clusters, bool* capped) {
  check_points(points, clusters);
  const Groups g = group(points, clusters);
  const auto n = static_cast<Eigen::Index>(g.ids.size());
  if (g.k < 2 || g.k >= n) {
    throw UndefinedMetricError("Calinski-Harabasz needs 2 <= k < n (k=" + std::to_string(g.k) +
                               ", n=" + std::to_string(n) + ")");
  }
  const Eigen::RowVectorXd mean = points.colwise().mean();
  double between = 0.0;
  for (int c = 0; c < g.k; ++c) {
    between += static_cast<double>(g.sizes[static_cast<std::size_t>(c)]) * (g.centroids.row(c) - mean).squaredNorm();
  }
  double within = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    within += (points.row(i) - g.centroids.row(g.ids[static_cast<std::size_t>(i)])).squaredNorm();
  }
  if (capped) *capped = false;
  if (within == 0.0) {
    if (capped) *capped = true;
    return kCalinskiHarabaszCap;
  }
  return std::min(kCalinskiHarabaszCap, (between / (g.k - 1)) / (within / static_cast<double>(n - g.k)));
}

std::vector<ClassScores> per_class_prf(std::span<const int> classes, std::span<const int> predicted,
                                       int num_classes) {
  check_lengths(classes, predicted);
  std::vector<ClassScores> out(static_cast<std::size_t>(std::max(num_classes, 0)));
  std::vector<std::int64_t> tp(out.size(), 0);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const int t = classes[i];
    const int p = predicted[i];
    if (t >= 0 && t < num_classes) ++out[static_cast<std::size_t>(t)].support;
    if (p >= 0 && p < num_classes) {
      ++out[static_cast<std::size_t>(p)].predicted_positives;
      if (p == t) ++tp[static_cast<std::size_t>(p)];
    }
  }
  for (std::size_t c = 0; c < out.size(); ++c) {
    auto& s = out[c];
    s.no_predictions = s.predicted_positives == 0;
    s.precision = s.no_predictions ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(s.predicted_positives);
    s.recall = s.support == 0 ? 0.0 : static_cast<double>(tp[c]) / static_cast<double>(s.support);
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  }
  return out;
}

ClusterAverages cluster_averages(const Dataset& ds, std::span<const int> clusters, int k) {
  if (clusters.size() != ds.size()) throw ShapeError("cluster labels do not align with the dataset");
  ClusterAverages out;
  out.counts.assign(static_cast<std::size_t>(k), 0);
  std::vector<Eigen::VectorXd> sums(static_cast<std::size_t>(k), Eigen::VectorXd::Zero(kNumBins));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int c = clusters[i];
    if (c < 0 || c >= k) throw IndexError("cluster id " + std::to_string(c) + " outside [0, " + std::to_string(k) + ")");
    ++out.counts[static_cast<std::size_t>(c)];
    sums[static_cast<std::size_t>(c)] += ds.sweeps[i].bins.cast<double>();
  }
  out.means.resize(static_cast<std::size_t>(k));
  for (std::size_t c = 0; c < sums.size(); ++c) {
    if (out.counts[c] == 0) continue;
    Eigen::VectorXd m = sums[c] / static_cast<double>(out.counts[c]);
    if (ds.norm_stats) m = m.array() * ds.norm_stats->std + ds.norm_stats->mean;
    out.means[c] = std::move(m);
  }
  return out;
}

std::vector<int> dominant_classes(std::span<const int> classes, std::span<const int> clusters, int k,
                                  int num_classes) {
  check_lengths(classes, clusters);
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts =
      Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(k, num_classes);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const int c = clusters[i];
    const int t = classes[i];
    if (c < 0 || c >= k) throw IndexError("cluster id " + std::to_string(c) + " outside [0, " + std::to_string(k) + ")");
    if (t < 0 || t >= num_classes) throw IndexError("class id " + std::to_string(t) + " out of range");
    ++counts(c, t);
  }
  std::vector<int> out(static_cast<std::size_t>(k), -1);
  for (int c = 0; c < k; ++c) {
    std::int64_t best = 0;
    for (int t = 0; t < num_classes; ++t) {
      if (counts(c, t) > best) {
        best = counts(c, t);
        out[static_cast<std::size_t>(c)] = t;
      }
    }
  }
  return out;
}

LabelMap dominant_label_map(std::span<const int> classes, std::span<const int> clusters,
                            const std::vector<std::string>& class_names, int k) {
  const auto dom = dominant_classes(classes, clusters, k, static_cast<int>(class_names.size()));
  LabelMap map;
  for (int c = 0; c < k; ++c) {
    if (dom[static_cast<std::size_t>(c)] >= 0) map.set(c, class_names[static_cast<std::size_t>(dom[static_cast<std::size_t>(c)])], k);
  }
  return map;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["variant"] = variant;
  if (surrogate_loss) j["note"] = "aeml results use a surrogate clustering loss";
  j["n"] = n;
  j["k"] = k;
  j["cluster_sizes"] = cluster_sizes;
  j["distance"] = {
      {"silhouette", silhouette},
      {"silhouette_sample_size", silhouette_sample_size},
      {"silhouette_seed", silhouette_seed},
      {"davies_bouldin", davies_bouldin},
      {"davies_bouldin_degenerate", davies_bouldin_degenerate},
      {"calinski_harabasz", calinski_harabasz},
      {"calinski_harabasz_capped", calinski_harabasz_capped},
  };
  if (labeled) {
    j["labels"] = {{"nmi", nmi}, {"ari", ari}, {"homogeneity", homogeneity}, {"completeness", completeness}};
    nlohmann::json mapping = nlohmann::json::array();
    for (std::size_t c = 0; c < dominant_class.size(); ++c) {
      const int d = dominant_class[c];
      mapping.push_back({{"cluster", c}, {"label", d < 0 ? std::string(kUnmapped) : class_names[static_cast<std::size_t>(d)]}});
    }
    j["dominant_labels"] = mapping;
    nlohmann::json table = nlohmann::json::array();
    for (std::size_t c = 0; c < per_class.size(); ++c) {
      const auto& s = per_class[c];
      table.push_back({{"class", class_names[c]},
                       {"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1},
                       {"support", s.support},
                       {"no_predictions", s.no_predictions}});
    }
    j["per_class"] = table;
  }
  return j;
}

MetricsReport evaluate(const Eigen::MatrixXd& points, std::span<const int> clusters, int k,
                       const std::vector<int>* classes, const std::vector<std::string>& class_names,
                       const EvaluateOptions& opts) {
  check_points(points, clusters);
  MetricsReport r;
  r.n = clusters.size();
  r.k = k;
  r.cluster_sizes = cluster_sizes(std::vector<int>(clusters.begin(), clusters.end()), k);
  r.silhouette = silhouette(points, clusters, opts.silhouette_max_points, opts.seed);
  r.silhouette_sample_size = std::min(r.n, opts.silhouette_max_points == 0 ? r.n : opts.silhouette_max_points);
  r.silhouette_seed = opts.seed;
  r.davies_bouldin = davies_bouldin(points, clusters, &r.davies_bouldin_degenerate);
  r.calinski_harabasz = calinski_harabasz(points, clusters, &r.calinski_harabasz_capped);
  if (classes) {
    const std::span<const int> truth(*classes);
    r.labeled = true;
    r.class_names = class_names;
    r.nmi = nmi(truth, clusters);
    r.ari = ari(truth, clusters);
    r.homogeneity = homogeneity(truth, clusters);
    r.completeness = completeness(truth, clusters);
    const int num_classes = static_cast<int>(class_names.size());
    r.dominant_class = dominant_classes(truth, clusters, k, num_classes);
    std::vector<int> predicted(clusters.size());
    for (std::size_t i = 0; i < clusters.size(); ++i) predicted[i] = r.dominant_class[static_cast<std::size_t>(clusters[i])];
    r.per_class = per_class_prf(truth, predicted, num_classes);
  }
  return r;
}

}  // namespace rfclust
