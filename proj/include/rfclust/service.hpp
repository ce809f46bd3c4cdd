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

#include <filesystem>
#include <memory>
#include <shared_mutex>
#include <string>

#include <json.hpp>

#include "rfclust/artifact.hpp"
#include "rfclust/label_map.hpp"

namespace httplib {
class Server;
}

namespace rfclust {

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

/// HTTP surface over one immutable artifact plus a mutable, persisted label
/// map. Handlers are plain methods so they can be exercised without sockets;
/// listen() wires them to /v1 routes.
///
///   POST /v1/classify           {"fft": [1024]} -> {cluster_id, label, confidence, embedding}
///   POST /v1/embed              {"fft": [1024]} -> {embedding}
///   GET  /v1/clusters           -> {revision, clusters: [{id, count, label, average, centroid2d}]}
///   PUT  /v1/clusters/{id}/label {"label": s}  -> {revision, cluster, label}
///   GET  /v1/model/info         -> {arch, k, params, gflops, trained_at, seed, ...}
class Service {
 public:
  /// Loads the label map from `labelmap_path` (missing file -> empty map).
  Service(ModelArtifact artifact, std::filesystem::path labelmap_path, bool cors = false);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ServiceResponse classify(const std::string& body) const;
  ServiceResponse embed(const std::string& body) const;
  ServiceResponse clusters() const;
  ServiceResponse set_label(const std::string& cluster_id, const std::string& body);
  ServiceResponse model_info() const;

  [[nodiscard]] LabelMap labels() const;
  [[nodiscard]] const ModelArtifact& artifact() const { return artifact_; }

  /// Binds and serves until stop(); throws IoError when the port is busy.
  void listen(const std::string& host, int port);
  /// Binds to a free port and returns it; serve with listen_after_bind().
  int bind_any_port(const std::string& host);
  void listen_after_bind();
  void stop();
  [[nodiscard]] bool running() const;

 private:
  void register_routes();

  const ModelArtifact artifact_;
  const std::filesystem::path labelmap_path_;
  const bool cors_;
  mutable std::shared_mutex labels_mutex_;
  LabelMap labels_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace rfclust
