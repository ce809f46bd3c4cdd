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

#include "rfclust/service.hpp"

#include <charconv>
#include <mutex>

#include <httplib.h>

#include "rfclust/errors.hpp"
#include "rfclust/nn/network.hpp"

namespace rfclust {

namespace {

ServiceResponse error(int status, const std::string& message) { return {status, {{"error", message}}}; }

SweepVector parse_sweep(const std::string& body) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw ValidationError("body is not a valid JSON document");
  }
  if (!doc.is_object() || !doc.contains("fft") || !doc["fft"].is_array()) {
    throw ValidationError("body must be an object with an 'fft' array");
  }
  const auto& fft = doc["fft"];
  if (fft.size() != static_cast<std::size_t>(kNumBins)) {
    throw ValidationError("fft must have 1024 values, got " + std::to_string(fft.size()));
  }
  SweepVector v(kNumBins);
  for (std::size_t i = 0; i < fft.size(); ++i) {
    if (!fft[i].is_number()) throw ValidationError("fft[" + std::to_string(i) + "] is not a number");
    v(static_cast<Eigen::Index>(i)) = static_cast<float>(fft[i].get<double>());
  }
  return v;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

Service::Service(ModelArtifact artifact, std::filesystem::path labelmap_path, bool cors)
    : artifact_(std::move(artifact)),
      labelmap_path_(std::move(labelmap_path)),
      cors_(cors),
      labels_(LabelMap::load(labelmap_path_)),
      server_(std::make_unique<httplib::Server>()) {
  // Plain SO_REUSEADDR only. httplib also sets SO_REUSEPORT, which would let a
  // second instance share a busy port instead of failing at startup.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  check_trained_model(artifact_.model);
  const int k = artifact_.model.clusters.k();
  for (const auto& [id, label] : labels_.entries) {
    if (id < 0 || id >= k) {
      throw IntegrityError("label map references cluster " + std::to_string(id) + " but the model has K=" +
                           std::to_string(k));
    }
  }
  register_routes();
}

Service::~Service() { stop(); }

ServiceResponse Service::classify(const std::string& body) const {
  try {
    const SweepVector sweep = parse_sweep(body);
    std::shared_lock lock(labels_mutex_);
    const Prediction p = predict(artifact_.model, labels_, sweep);
    return {200,
            {{"cluster_id", p.cluster_id},
             {"label", p.label},
             {"confidence", p.confidence},
             {"embedding", to_vector(p.embedding)},
             {"revision", labels_.revision}}};
  } catch (const ValidationError& e) {
    return error(400, e.what());
  }
}

ServiceResponse Service::embed(const std::string& body) const {
  try {
    const SweepVector sweep = parse_sweep(body);
    const Prediction p = predict(artifact_.model, LabelMap{}, sweep);
    return {200, {{"embedding", to_vector(p.embedding)}}};
  } catch (const ValidationError& e) {
    return error(400, e.what());
  }
}

ServiceResponse Service::clusters() const {
  const ClusterModel& cm = artifact_.model.clusters;
  std::shared_lock lock(labels_mutex_);
  nlohmann::json list = nlohmann::json::array();
  for (int k = 0; k < cm.k(); ++k) {
    const auto idx = static_cast<std::size_t>(k);
    const auto& avg = artifact_.stats.averages_db[idx];
    nlohmann::json c2d = nlohmann::json::array();
    for (Eigen::Index d = 0; d < std::min<Eigen::Index>(2, cm.dim()); ++d) c2d.push_back(cm.centroids(k, d));
    list.push_back({{"id", k},
                    {"count", artifact_.stats.counts[idx]},
                    {"label", labels_.label(k)},
                    {"average", avg ? nlohmann::json(to_vector(*avg)) : nlohmann::json()},
                    {"centroid2d", c2d}});
  }
  return {200, {{"revision", labels_.revision}, {"clusters", list}}};
}

ServiceResponse Service::set_label(const std::string& cluster_id, const std::string& body) {
  int id = -1;
  const auto* end = cluster_id.data() + cluster_id.size();
  const auto [ptr, ec] = std::from_chars(cluster_id.data(), end, id);
  if (ec != std::errc{} || ptr != end) return error(404, "no cluster '" + cluster_id + "'");
  std::string label;
  try {
    const auto doc = nlohmann::json::parse(body);
    if (!doc.is_object() || !doc.contains("label") || !doc["label"].is_string()) {
      return error(400, "body must be an object with a string 'label'");
    }
    label = doc["label"].get<std::string>();
  } catch (const nlohmann::json::parse_error&) {
    return error(400, "body is not a valid JSON document");
  }

  std::unique_lock lock(labels_mutex_);
  LabelMap next = labels_;
  try {
    next.set(id, label, artifact_.model.clusters.k());
  } catch (const NotFoundError& e) {
    return error(404, e.what());
  } catch (const ValidationError& e) {
    return error(400, e.what());
  }
  try {
    next.save(labelmap_path_);
  } catch (const Error& e) {
    return error(500, std::string("label map not persisted: ") + e.what());
  }
  labels_ = std::move(next);
  return {200, {{"revision", labels_.revision}, {"cluster", id}, {"label", label}}};
}

ServiceResponse Service::model_info() const {
  const Model& net = artifact_.model.network;
  const auto report = nn::complexity_report(net);
  nlohmann::json info = {{"arch", std::string(to_string(artifact_.model.variant))},
                         {"network", std::string(nn::to_string(net.arch))},
                         {"k", net.num_clusters},
                         {"params", report.trainable_params},
                         {"gflops", report.forward_gflops},
                         {"embedding_dim", artifact_.model.clusters.dim()},
                         {"trained_at", artifact_.meta.trained_at},
                         {"seed", artifact_.meta.seed},
                         {"epochs", artifact_.meta.epochs},
                         {"train_size", artifact_.meta.train_size},
                         {"dataset_fingerprint", artifact_.meta.dataset_fingerprint},
                         {"format_version", kArtifactFormatVersion}};
  if (artifact_.model.variant == Variant::Aeml) info["note"] = "aeml clustering loss is a surrogate";
  return {200, info};
}

LabelMap Service::labels() const {
  std::shared_lock lock(labels_mutex_);
  return labels_;
}

void Service::register_routes() {
  auto send = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  httplib::Server& s = *server_;
  if (cors_) {
    s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});
    s.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  }
  s.Post("/v1/classify", [this, send](const httplib::Request& req, httplib::Response& res) { send(res, classify(req.body)); });
  s.Post("/v1/embed", [this, send](const httplib::Request& req, httplib::Response& res) { send(res, embed(req.body)); });
  s.Get("/v1/clusters", [this, send](const httplib::Request&, httplib::Response& res) { send(res, clusters()); });
  s.Put(R"(/v1/clusters/([^/]+)/label)", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, set_label(req.matches[1].str(), req.body));
  });
  s.Get("/v1/model/info", [this, send](const httplib::Request&, httplib::Response& res) { send(res, model_info()); });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(nlohmann::json{{"error", what}}.dump(), "application/json");
  });
}

void Service::listen(const std::string& host, int port) {
  if (!server_->bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  listen_after_bind();
}

int Service::bind_any_port(const std::string& host) {
  const int port = server_->bind_to_any_port(host);
  if (port < 0) throw IoError("cannot bind " + host);
  return port;
}

void Service::listen_after_bind() { server_->listen_after_bind(); }

void Service::stop() {
  if (server_) server_->stop();
}

bool Service::running() const { return server_ && server_->is_running(); }

}  // namespace rfclust
