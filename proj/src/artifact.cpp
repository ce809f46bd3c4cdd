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

#include "rfclust/artifact.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rfclust/errors.hpp"

namespace rfclust {

namespace {

constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

// Little-endian byte images of float / double arrays.
template <class T, class U>
std::vector<std::uint8_t> le_bytes(const U* data, std::size_t count) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  std::vector<std::uint8_t> out(count * sizeof(T));
  for (std::size_t i = 0; i < count; ++i) {
    const Bits bits = std::bit_cast<Bits>(static_cast<T>(data[i]));
    for (std::size_t b = 0; b < sizeof(T); ++b) out[i * sizeof(T) + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return out;
}

template <class T>
std::vector<T> from_le_bytes(const std::vector<std::uint8_t>& bytes) {
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  if (bytes.size() % sizeof(T) != 0) throw IntegrityError("blob size is not a multiple of the element size");
  std::vector<T> out(bytes.size() / sizeof(T));
  for (std::size_t i = 0; i < out.size(); ++i) {
    Bits bits = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) bits |= static_cast<Bits>(bytes[i * sizeof(T) + b]) << (8 * b);
    out[i] = std::bit_cast<T>(bits);
  }
  return out;
}

template <class Derived>
std::string f32_blob(const Eigen::DenseBase<Derived>& m) {
  using S = typename Derived::Scalar;
  const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  return base64_encode(le_bytes<float>(rm.data(), static_cast<std::size_t>(rm.size())));
}

template <class Derived>
std::string f64_blob(const Eigen::DenseBase<Derived>& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m.template cast<double>();
  return base64_encode(le_bytes<double>(rm.data(), static_cast<std::size_t>(rm.size())));
}

template <class T>
std::vector<T> read_blob(const nlohmann::json& j, std::size_t expected, const std::string& what) {
  std::vector<T> v = from_le_bytes<T>(base64_decode(j.get<std::string>()));
  if (v.size() != expected) {
    throw IntegrityError(what + ": blob holds " + std::to_string(v.size()) + " values, expected " +
                         std::to_string(expected));
  }
  return v;
}

Eigen::MatrixXd read_f64_matrix(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  const auto v = read_blob<double>(j, static_cast<std::size_t>(rows * cols), what);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

nlohmann::json spec_to_json(const nn::LayerSpec& s) {
  return {{"kind", std::string(nn::to_string(s.kind))},
          {"in_channels", s.in_channels},
          {"out_channels", s.out_channels},
          {"kernel", s.kernel},
          {"stride", s.stride},
          {"padding", s.padding},
          {"output_padding", s.output_padding},
          {"pool", s.pool},
          {"in_features", s.in_features},
          {"out_features", s.out_features},
          {"length", s.length}};
}

nn::LayerSpec spec_from_json(const nlohmann::json& j) {
  nn::LayerSpec s;
  s.kind = nn::parse_layer_kind(j.at("kind").get<std::string>());
  s.in_channels = j.value("in_channels", nn::Index{0});
  s.out_channels = j.value("out_channels", nn::Index{0});
  s.kernel = j.value("kernel", nn::Index{0});
  s.stride = j.value("stride", nn::Index{1});
  s.padding = j.value("padding", nn::Index{0});
  s.output_padding = j.value("output_padding", nn::Index{0});
  s.pool = j.value("pool", nn::Index{0});
  s.in_features = j.value("in_features", nn::Index{0});
  s.out_features = j.value("out_features", nn::Index{0});
  s.length = j.value("length", nn::Index{0});
  return s;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (std::uint32_t{bytes[i]} << 16) | (std::uint32_t{bytes[i + 1]} << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (const std::size_t rest = bytes.size() - i; rest > 0) {
    std::uint32_t v = std::uint32_t{bytes[i]} << 16;
    if (rest == 2) v |= std::uint32_t{bytes[i + 1]} << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  static const std::array<int, 256> kIndex = [] {
    std::array<int, 256> t{};
    t.fill(-1);
    for (std::size_t i = 0; i < kAlphabet.size(); ++i) t[static_cast<unsigned char>(kAlphabet[i])] = static_cast<int>(i);
    return t;
  }();
  if (text.size() % 4 != 0) throw ParseError("base64 length must be a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    const bool last = i + 4 == text.size();
    int pad = 0;
    std::uint32_t v = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      const char c = text[i + j];
      if (c == '=' && last && j >= 2) {
        ++pad;
        v <<= 6;
        continue;
      }
      const int idx = kIndex[static_cast<unsigned char>(c)];
      if (idx < 0 || pad > 0) throw ParseError("invalid base64 character at offset " + std::to_string(i + j));
      v = (v << 6) | static_cast<std::uint32_t>(idx);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

ModelArtifact make_artifact(const TrainReport& report, const Dataset& train, std::uint64_t seed,
                            const nlohmann::json& config) {
  ModelArtifact a;
  a.model = report.model;
  a.meta.seed = seed;
  a.meta.epochs = static_cast<int>(report.epochs.size());
  a.meta.train_size = train.size();
  a.meta.dataset_fingerprint = hex64(dataset_fingerprint(train));
  a.meta.trained_at = utc_timestamp();
  a.meta.config = config;
  const ClusterAverages avg = cluster_averages(train, report.final_labels, report.model.clusters.k());
  a.stats.counts = avg.counts;
  a.stats.averages_db = avg.means;
  return a;
}

nlohmann::json artifact_to_json(const ModelArtifact& artifact) {
  const TrainedModel& m = artifact.model;
  const Model& net = m.network;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers) {
    nlohmann::json jl = spec_to_json(l.spec);
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : l.params) {
      params.push_back({{"shape", {p.value.rows(), p.value.cols()}}, {"data", f32_blob(p.value)}});
    }
    jl["params"] = params;
    if (l.spec.kind == nn::LayerKind::BatchNorm1d) {
      jl["running_mean"] = f32_blob(l.running_mean);
      jl["running_var"] = f32_blob(l.running_var);
    }
    layers.push_back(std::move(jl));
  }
  const auto report = nn::complexity_report(net);
  const PcaBasis& pca = m.clusters.pca;

  nlohmann::json averages = nlohmann::json::array();
  for (const auto& avg : artifact.stats.averages_db) averages.push_back(avg ? nlohmann::json(f64_blob(*avg)) : nlohmann::json());

  nlohmann::json doc;
  doc["format"] = "rfclust-model";
  doc["format_version"] = kArtifactFormatVersion;
  doc["arch"] = std::string(nn::to_string(net.arch));
  doc["variant"] = std::string(to_string(m.variant));
  doc["k"] = net.num_clusters;
  doc["encoder_end"] = net.encoder_end;
  doc["embedding_end"] = net.embedding_end;
  doc["param_count"] = report.trainable_params;
  doc["forward_gflops"] = report.forward_gflops;
  doc["layers"] = std::move(layers);
  if (m.norm_stats) doc["norm_stats"] = {{"mean", m.norm_stats->mean}, {"std", m.norm_stats->std}};
  doc["pca"] = {{"input_dim", pca.input_dim()},
                {"output_dim", pca.output_dim()},
                {"mean", f64_blob(pca.mean)},
                {"components", f64_blob(pca.components)},
                {"explained_variance", f64_blob(pca.explained_variance)},
                {"total_variance", pca.total_variance}};
  doc["clusters"] = {{"k", m.clusters.k()},
                     {"dim", m.clusters.dim()},
                     {"centroids", f64_blob(m.clusters.centroids)},
                     {"inertia", m.clusters.inertia},
                     {"iterations", m.clusters.iterations}};
  doc["stats"] = {{"counts", artifact.stats.counts}, {"averages_db", averages}};
  doc["metadata"] = {{"seed", artifact.meta.seed},
                     {"epochs", artifact.meta.epochs},
                     {"train_size", artifact.meta.train_size},
                     {"dataset_fingerprint", artifact.meta.dataset_fingerprint},
                     {"trained_at", artifact.meta.trained_at},
                     {"config", artifact.meta.config}};
  return doc;
}

ModelArtifact artifact_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("format", std::string{}) != "rfclust-model") throw IntegrityError("not an rfclust model document");
    const int version = doc.at("format_version").get<int>();
    if (version != kArtifactFormatVersion) {
      throw IntegrityError("unsupported artifact format version " + std::to_string(version));
    }
    ModelArtifact a;
    TrainedModel& m = a.model;
    m.variant = parse_variant(doc.at("variant").get<std::string>());
    const auto arch = nn::parse_architecture(doc.at("arch").get<std::string>());
    const int k = doc.at("k").get<int>();

    std::vector<nn::LayerSpec> specs;
    for (const auto& jl : doc.at("layers")) specs.push_back(spec_from_json(jl));
    const auto complexity = nn::complexity_report(specs);
    const auto stored = doc.at("param_count").get<std::int64_t>();
    if (complexity.trainable_params != stored) {
      throw IntegrityError("stored parameter count " + std::to_string(stored) + " does not match the layer list (" +
                           std::to_string(complexity.trainable_params) + ")");
    }
    m.network = nn::make_network<float>(arch, k, specs, 0);
    m.network.encoder_end = doc.at("encoder_end").get<std::size_t>();
    m.network.embedding_end = doc.at("embedding_end").get<std::size_t>();

    const auto& jlayers = doc.at("layers");
    for (std::size_t i = 0; i < m.network.layers.size(); ++i) {
      auto& layer = m.network.layers[i];
      const auto& jparams = jlayers[i].at("params");
      if (jparams.size() != layer.params.size()) {
        throw IntegrityError("layer " + std::to_string(i) + ": expected " + std::to_string(layer.params.size()) +
                             " parameter arrays");
      }
      for (std::size_t p = 0; p < layer.params.size(); ++p) {
        auto& value = layer.params[p].value;
        const auto v = read_blob<float>(jparams[p].at("data"), static_cast<std::size_t>(value.size()),
                                        "layer " + std::to_string(i) + " param " + std::to_string(p));
        std::memcpy(value.data(), v.data(), v.size() * sizeof(float));
      }
      if (layer.spec.kind == nn::LayerKind::BatchNorm1d) {
        const auto n = static_cast<std::size_t>(layer.running_mean.size());
        const auto rm = read_blob<float>(jlayers[i].at("running_mean"), n, "layer " + std::to_string(i) + " running mean");
        const auto rv = read_blob<float>(jlayers[i].at("running_var"), n, "layer " + std::to_string(i) + " running var");
        std::memcpy(layer.running_mean.data(), rm.data(), n * sizeof(float));
        std::memcpy(layer.running_var.data(), rv.data(), n * sizeof(float));
      }
    }

    if (doc.contains("norm_stats")) {
      m.norm_stats = NormStats{doc["norm_stats"].at("mean").get<double>(), doc["norm_stats"].at("std").get<double>()};
    }
    const auto& jp = doc.at("pca");
    const auto in_dim = jp.at("input_dim").get<Eigen::Index>();
    const auto out_dim = jp.at("output_dim").get<Eigen::Index>();
    PcaBasis& pca = m.clusters.pca;
    pca.mean = read_f64_matrix(jp.at("mean"), in_dim, 1, "pca mean");
    pca.components = read_f64_matrix(jp.at("components"), out_dim, in_dim, "pca components");
    pca.explained_variance = read_f64_matrix(jp.at("explained_variance"), out_dim, 1, "pca variance");
    pca.total_variance = jp.at("total_variance").get<double>();

    const auto& jc = doc.at("clusters");
    const auto ck = jc.at("k").get<Eigen::Index>();
    const auto cdim = jc.at("dim").get<Eigen::Index>();
    m.clusters.centroids = read_f64_matrix(jc.at("centroids"), ck, cdim, "centroids");
    m.clusters.inertia = jc.at("inertia").get<double>();
    m.clusters.iterations = jc.value("iterations", 0);

    const auto& js = doc.at("stats");
    a.stats.counts = js.at("counts").get<std::vector<std::size_t>>();
    for (const auto& avg : js.at("averages_db")) {
      if (avg.is_null()) {
        a.stats.averages_db.emplace_back();
      } else {
        a.stats.averages_db.emplace_back(read_f64_matrix(avg, kNumBins, 1, "cluster average"));
      }
    }
    if (a.stats.counts.size() != static_cast<std::size_t>(ck) || a.stats.averages_db.size() != a.stats.counts.size()) {
      throw IntegrityError("cluster statistics do not cover K clusters");
    }

    const auto& jm = doc.at("metadata");
    a.meta.seed = jm.value("seed", std::uint64_t{0});
    a.meta.epochs = jm.value("epochs", 0);
    a.meta.train_size = jm.value("train_size", std::size_t{0});
    a.meta.dataset_fingerprint = jm.value("dataset_fingerprint", std::string{});
    a.meta.trained_at = jm.value("trained_at", std::string{});
    a.meta.config = jm.value("config", nlohmann::json::object());

    check_trained_model(m);
    return a;
  } catch (const IntegrityError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("malformed artifact: ") + e.what());
  } catch (const Error& e) {
    throw IntegrityError(std::string("invalid artifact: ") + e.what());
  }
}

void save_artifact(const ModelArtifact& artifact, const std::filesystem::path& path) {
  write_file_atomic(path, artifact_to_json(artifact).dump());
}

ModelArtifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open artifact: " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IntegrityError("artifact is not a valid document: " + std::string(e.what()));
  }
  return artifact_from_json(doc);
}

nlohmann::json train_report_to_json(const TrainReport& report, const nlohmann::json& config) {
  nlohmann::json epochs = nlohmann::json::array();
  int pretrain = 0;
  int joint = 0;
  for (const auto& e : report.epochs) {
    if (e.phase == "pretrain") ++pretrain;
    if (e.phase == "joint") ++joint;
    epochs.push_back({{"epoch", e.epoch},
                      {"phase", e.phase},
                      {"loss", e.loss},
                      {"recon_loss", e.recon_loss},
                      {"cluster_loss", e.cluster_loss},
                      {"inertia", e.inertia},
                      {"cluster_sizes", e.cluster_sizes},
                      {"batch_losses", e.batch_losses},
                      {"seconds", e.seconds}});
  }
  nlohmann::json doc;
  doc["variant"] = std::string(to_string(report.variant));
  if (report.variant == Variant::Aeml) doc["note"] = "aeml clustering loss is a surrogate";
  doc["epochs"] = std::move(epochs);
  if (report.variant == Variant::Ssdc) {
    doc["rounds"] = report.epochs.size();
  } else {
    doc["pretrain_epochs"] = pretrain;
    doc["joint_epochs"] = joint;
  }
  doc["final_inertia"] = report.model.clusters.inertia;
  doc["final_cluster_sizes"] = cluster_sizes(report.final_labels, report.model.clusters.k());
  doc["seconds"] = report.seconds;
  doc["config"] = config;
  return doc;
}

}  // namespace rfclust
