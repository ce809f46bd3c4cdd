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

#include "rfclust/label_map.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>

#include <unistd.h>

#include "rfclust/errors.hpp"

namespace rfclust {

std::string LabelMap::label(int cluster) const {
  const auto it = entries.find(cluster);
  return it == entries.end() ? std::string(kUnmapped) : it->second;
}

void LabelMap::set(int cluster, const std::string& label, int k) {
  if (cluster < 0 || cluster >= k) {
    throw NotFoundError("cluster " + std::to_string(cluster) + " does not exist (K=" + std::to_string(k) + ")");
  }
  if (label.empty()) throw ValidationError("label must be a non-empty string");
  entries[cluster] = label;
  updated_at[cluster] = utc_timestamp();
  ++revision;
}

nlohmann::json LabelMap::to_json() const {
  nlohmann::json doc;
  doc["revision"] = revision;
  doc["labels"] = nlohmann::json::array();
  for (const auto& [id, label] : entries) {
    nlohmann::json e{{"cluster", id}, {"label", label}};
    if (const auto it = updated_at.find(id); it != updated_at.end()) e["updated_at"] = it->second;
    doc["labels"].push_back(std::move(e));
  }
  return doc;
}

LabelMap LabelMap::from_json(const nlohmann::json& doc) {
  LabelMap m;
  try {
    m.revision = doc.value("revision", std::uint64_t{0});
    for (const auto& e : doc.value("labels", nlohmann::json::array())) {
      const int id = e.at("cluster").get<int>();
      const auto label = e.at("label").get<std::string>();
      if (id < 0 || label.empty()) throw ParseError("label map entry with invalid cluster or empty label");
      m.entries[id] = label;
      if (e.contains("updated_at")) m.updated_at[id] = e["updated_at"].get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed label map: ") + e.what());
  }
  return m;
}

LabelMap LabelMap::load(const std::filesystem::path& path) {
  if (path.empty() || !std::filesystem::exists(path)) return {};
  std::ifstream in(path);
  if (!in) throw IoError("cannot read label map: " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed label map: ") + e.what());
  }
}

void LabelMap::save(const std::filesystem::path& path) const { write_file_atomic(path, to_json().dump(2) + "\n"); }

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  static std::atomic<std::uint64_t> counter{0};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot replace " + path.string() + ": " + ec.message());
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace rfclust
