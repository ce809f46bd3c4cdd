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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

namespace rfclust {

inline constexpr const char* kUnmapped = "unmapped";

/// Cluster id -> RAT label, as assigned by an expert or by plurality vote.
struct LabelMap {
  std::map<int, std::string> entries;
  std::map<int, std::string> updated_at;  // ISO-8601 UTC
  std::uint64_t revision = 0;

  /// Mapped label or "unmapped".
  [[nodiscard]] std::string label(int cluster) const;
  [[nodiscard]] bool contains(int cluster) const { return entries.count(cluster) != 0; }

  /// Sets a label and bumps the revision. Throws NotFoundError for
  /// cluster ids outside [0, k) and ValidationError for empty labels.
  void set(int cluster, const std::string& label, int k);

  [[nodiscard]] nlohmann::json to_json() const;
  static LabelMap from_json(const nlohmann::json& doc);

  /// Missing file -> empty map.
  static LabelMap load(const std::filesystem::path& path);
  /// Writes a temporary sibling file and renames it over `path`.
  void save(const std::filesystem::path& path) const;
};

/// Writes `content` to a temporary sibling of `path`, then renames it.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string utc_timestamp();

}  // namespace rfclust
