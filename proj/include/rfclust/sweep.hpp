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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rfclust {

/// Every sweep carries this many FFT amplitude bins.
inline constexpr Eigen::Index kNumBins = 1024;

using SweepVector = Eigen::VectorXf;

/// One FFT amplitude sweep in dB, optionally labeled.
struct Sweep {
  SweepVector bins = SweepVector::Zero(kNumBins);
  std::optional<int> label;
  std::map<std::string, std::string> meta;
};

/// Global scalar standardization parameters (dB).
struct NormStats {
  double mean = 0.0;
  double std = 1.0;
};

/// Ordered collection of sweeps.
///
/// When `norm_stats` is set the bins are in normalized units; otherwise they
/// are raw dB values.
struct Dataset {
  std::vector<Sweep> sweeps;
  std::vector<std::string> class_names;
  std::optional<NormStats> norm_stats;

  [[nodiscard]] std::size_t size() const { return sweeps.size(); }
  [[nodiscard]] bool empty() const { return sweeps.empty(); }
  [[nodiscard]] bool labeled() const;
  [[nodiscard]] int num_classes() const;

  /// Labels as a flat vector; throws ContractError when any sweep is unlabeled.
  [[nodiscard]] std::vector<int> labels() const;

  /// Row-major (n x 1024) copy of the bins of the selected sweeps.
  [[nodiscard]] Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> matrix(
      std::span<const std::size_t> indices) const;
  [[nodiscard]] Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> matrix() const;

  /// Throws ValidationError on bin count, non-finite values, or label range.
  void validate() const;
};

enum class DataFormat { Csv, Binary };

/// Parses "csv" / "bin"; throws UsageError otherwise.
DataFormat parse_format(std::string_view tag);
/// Infers the format from a file extension (.bin -> Binary, else Csv).
DataFormat format_from_path(const std::filesystem::path& path);

Dataset load_dataset(const std::filesystem::path& path, DataFormat format);
void save_dataset(const Dataset& ds, const std::filesystem::path& path, DataFormat format);

/// Fits global mean/std over all bins of all sweeps and standardizes.
/// Returns the input unchanged when it is already normalized.
Dataset normalize_dataset(const Dataset& ds);
/// Standardizes raw bins with previously fitted statistics.
Dataset apply_normalization(const Dataset& ds, const NormStats& stats);
/// Inverse of normalization; requires norm_stats.
Dataset denormalize_dataset(const Dataset& ds);

/// Stable 64-bit FNV-1a digest of bins and labels.
std::uint64_t dataset_fingerprint(const Dataset& ds);

// --- Synthetic RAT-like sweeps -------------------------------------------

enum class ShapeKind { WidebandPlateau, NarrowbandPeak, MultiTone, PilotPlateau, NoiseOnly };

ShapeKind parse_shape_kind(std::string_view name);
std::string_view to_string(ShapeKind kind);

struct ClassTemplate {
  std::string name;
  ShapeKind kind = ShapeKind::NoiseOnly;
  int center_lo = 512;
  int center_hi = 512;
  int width_lo = 1;
  int width_hi = 1;
  double power_lo_db = 0.0;  // above the noise floor
  double power_hi_db = 0.0;
};

struct SyntheticProfile {
  std::vector<ClassTemplate> templates;
  double noise_floor_db = -100.0;
  double noise_sigma_db = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Built-in profile with `num_classes` templates (2..5) and a 15 dB power
/// spread per class.
SyntheticProfile default_profile(int num_classes, std::uint64_t seed);

/// JSON profile document: {"noise_floor_db", "noise_sigma_db", "seed",
/// "templates": [{"name", "kind", "center": [lo, hi], "width": [lo, hi],
/// "power_db": [lo, hi]}]}.
SyntheticProfile load_profile(const std::filesystem::path& path);

/// n_per_class sweeps per template, class-major order; deterministic for a
/// fixed profile seed.
Dataset synth_generate(const SyntheticProfile& profile, std::size_t n_per_class);

}  // namespace rfclust
