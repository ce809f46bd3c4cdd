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

#include "rfclust/sweep.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "rfclust/errors.hpp"
#include "rfclust/rng.hpp"

namespace rfclust {

namespace {

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && !s.empty();
}

void put_u16(std::ostream& os, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  os.write(b, 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void fill_default_class_names(Dataset& ds) {
  const int k = ds.num_classes();
  for (int c = static_cast<int>(ds.class_names.size()); c < k; ++c) {
    ds.class_names.push_back("class" + std::to_string(c));
  }
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path.string());

  Dataset ds;
  std::string line;
  std::optional<bool> has_label;
  bool first = true;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    auto fields = split_fields(view);
    if (first) {
      first = false;
      const std::string_view head = trim(fields.front());
      if (!head.empty() && (head.front() == 'b' || head.front() == 'B')) {
        has_label = trim(fields.back()) == "label";
        continue;
      }
    }
    ++row;
    const std::size_t expected_label = fields.size() == static_cast<std::size_t>(kNumBins) + 1 ? 1 : 0;
    if (!has_label) has_label = expected_label == 1;
    const std::size_t want = static_cast<std::size_t>(kNumBins) + (*has_label ? 1 : 0);
    if (fields.size() != want) {
      throw ParseError("row " + std::to_string(row) + ": expected " + std::to_string(want) + " values, got " +
                       std::to_string(fields.size()));
    }
    Sweep s;
    for (Eigen::Index b = 0; b < kNumBins; ++b) {
      float v;
      if (!parse_number(fields[static_cast<std::size_t>(b)], v) || !std::isfinite(v)) {
        throw ParseError("row " + std::to_string(row) + ": non-numeric value in column " + std::to_string(b));
      }
      s.bins[b] = v;
    }
    if (*has_label) {
      int label;
      if (!parse_number(fields.back(), label)) {
        throw ParseError("row " + std::to_string(row) + ": label is not an integer");
      }
      if (label < 0) throw ParseError("row " + std::to_string(row) + ": negative label");
      s.label = label;
    }
    ds.sweeps.push_back(std::move(s));
  }
  fill_default_class_names(ds);
  return ds;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file: " + path.string());
  const bool labeled = ds.labeled();
  for (Eigen::Index b = 0; b < kNumBins; ++b) {
    if (b) out << ',';
    out << 'b' << b;
  }
  if (labeled) out << ",label";
  out << '\n';
  char buf[64];
  for (const auto& s : ds.sweeps) {
    for (Eigen::Index b = 0; b < kNumBins; ++b) {
      if (b) out << ',';
      // Shortest round-trip representation of the float32 value.
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), s.bins[b]);
      out.write(buf, ptr - buf);
    }
    if (labeled) out << ',' << *s.label;
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Dataset load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "SPSW", 4) != 0) {
    throw ParseError("not an SPSW file: " + path.string());
  }
  const std::uint16_t version = get_u16(bytes.data() + 4);
  const std::uint16_t flags = get_u16(bytes.data() + 6);
  const std::uint32_t count = get_u32(bytes.data() + 8);
  const std::uint32_t nbins = get_u32(bytes.data() + 12);
  if (version != 1) throw ParseError("unsupported SPSW version " + std::to_string(version));
  if (nbins != static_cast<std::uint32_t>(kNumBins)) {
    throw ParseError("SPSW bins-per-sweep must be 1024, got " + std::to_string(nbins));
  }
  const bool labeled = flags & 1u;
  const std::size_t record = 4 * static_cast<std::size_t>(kNumBins) + (labeled ? 4 : 0);
  if (bytes.size() != 16 + record * count) {
    throw ParseError("SPSW payload size mismatch: expected " + std::to_string(16 + record * count) + " bytes");
  }
  Dataset ds;
  ds.sweeps.resize(count);
  const unsigned char* p = bytes.data() + 16;
  for (std::uint32_t i = 0; i < count; ++i) {
    Sweep& s = ds.sweeps[i];
    for (Eigen::Index b = 0; b < kNumBins; ++b, p += 4) {
      const float v = std::bit_cast<float>(get_u32(p));
      if (!std::isfinite(v)) throw ParseError("row " + std::to_string(i + 1) + ": non-finite value");
      s.bins[b] = v;
    }
    if (labeled) {
      const auto label = static_cast<std::int32_t>(get_u32(p));
      p += 4;
      if (label < 0) throw ParseError("row " + std::to_string(i + 1) + ": negative label");
      s.label = label;
    }
  }
  fill_default_class_names(ds);
  return ds;
}

void save_binary(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset file: " + path.string());
  const bool labeled = ds.labeled();
  out.write("SPSW", 4);
  put_u16(out, 1);
  put_u16(out, labeled ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(ds.size()));
  put_u32(out, static_cast<std::uint32_t>(kNumBins));
  for (const auto& s : ds.sweeps) {
    for (Eigen::Index b = 0; b < kNumBins; ++b) put_u32(out, std::bit_cast<std::uint32_t>(s.bins[b]));
    if (labeled) put_u32(out, static_cast<std::uint32_t>(static_cast<std::int32_t>(*s.label)));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

// Shape value in dB above the floor at integer bin `b`.
double plateau(double b, double center, double width, double edge) {
  const double d = std::abs(b - center) - width / 2.0;
  if (d <= 0.0) return 1.0;
  if (d >= edge) return 0.0;
  return 1.0 - d / edge;
}

double triangle(double b, double center, double half_width) {
  const double d = std::abs(b - center);
  return d >= half_width ? 0.0 : 1.0 - d / half_width;
}

}  // namespace

bool Dataset::labeled() const {
  return !sweeps.empty() &&
         std::all_of(sweeps.begin(), sweeps.end(), [](const Sweep& s) { return s.label.has_value(); });
}

int Dataset::num_classes() const {
  int k = static_cast<int>(class_names.size());
  for (const auto& s : sweeps) {
    if (s.label) k = std::max(k, *s.label + 1);
  }
  return k;
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(sweeps.size());
  for (std::size_t i = 0; i < sweeps.size(); ++i) {
    if (!sweeps[i].label) throw ContractError("sweep " + std::to_string(i) + " is unlabeled");
    out.push_back(*sweeps[i].label);
  }
  return out;
}

RowMatrixF Dataset::matrix(std::span<const std::size_t> indices) const {
  RowMatrixF m(static_cast<Eigen::Index>(indices.size()), kNumBins);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    m.row(static_cast<Eigen::Index>(r)) = sweeps.at(indices[r]).bins.transpose();
  }
  return m;
}

RowMatrixF Dataset::matrix() const {
  std::vector<std::size_t> all(sweeps.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return matrix(all);
}

void Dataset::validate() const {
  bool any_label = false;
  for (std::size_t i = 0; i < sweeps.size(); ++i) {
    const auto& s = sweeps[i];
    if (s.bins.size() != kNumBins) {
      throw ValidationError("sweep " + std::to_string(i) + " has " + std::to_string(s.bins.size()) + " bins");
    }
    if (!s.bins.allFinite()) throw ValidationError("sweep " + std::to_string(i) + " has non-finite bins");
    if (s.label) {
      any_label = true;
      if (*s.label < 0) throw ValidationError("sweep " + std::to_string(i) + " has a negative label");
      if (!class_names.empty() && *s.label >= static_cast<int>(class_names.size())) {
        throw ValidationError("sweep " + std::to_string(i) + " label outside class_names");
      }
    }
  }
  if (any_label && class_names.empty()) throw ValidationError("labeled dataset without class names");
}

DataFormat parse_format(std::string_view tag) {
  if (tag == "csv") return DataFormat::Csv;
  if (tag == "bin") return DataFormat::Binary;
  throw UsageError("unknown dataset format '" + std::string(tag) + "' (expected csv or bin)");
}

DataFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".bin" ? DataFormat::Binary : DataFormat::Csv;
}

Dataset load_dataset(const std::filesystem::path& path, DataFormat format) {
  if (!std::filesystem::exists(path)) throw IoError("dataset file not found: " + path.string());
  return format == DataFormat::Csv ? load_csv(path) : load_binary(path);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path, DataFormat format) {
  if (ds.empty()) throw PreconditionError("refusing to save an empty dataset");
  if (format == DataFormat::Csv) {
    save_csv(ds, path);
  } else {
    save_binary(ds, path);
  }
}

Dataset normalize_dataset(const Dataset& ds) {
  if (ds.empty()) throw PreconditionError("cannot normalize an empty dataset");
  if (ds.norm_stats) return ds;
  double sum = 0.0;
  for (const auto& s : ds.sweeps) sum += s.bins.cast<double>().sum();
  const double count = static_cast<double>(ds.size()) * static_cast<double>(kNumBins);
  const double mean = sum / count;
  double ss = 0.0;
  for (const auto& s : ds.sweeps) ss += (s.bins.cast<double>().array() - mean).square().sum();
  const double std = std::sqrt(ss / count);
  if (!(std > 0.0)) throw DegenerateDataError("dataset has zero amplitude variance");
  return apply_normalization(ds, NormStats{mean, std});
}

Dataset apply_normalization(const Dataset& ds, const NormStats& stats) {
  if (ds.norm_stats) throw ContractError("dataset is already normalized");
  Dataset out = ds;
  for (auto& s : out.sweeps) {
    s.bins = ((s.bins.cast<double>().array() - stats.mean) / stats.std).cast<float>().matrix();
  }
  out.norm_stats = stats;
  return out;
}

Dataset denormalize_dataset(const Dataset& ds) {
  if (!ds.norm_stats) throw ContractError("dataset carries no normalization statistics");
  Dataset out = ds;
  const NormStats st = *ds.norm_stats;
  for (auto& s : out.sweeps) {
    s.bins = (s.bins.cast<double>().array() * st.std + st.mean).cast<float>().matrix();
  }
  out.norm_stats.reset();
  return out;
}

std::uint64_t dataset_fingerprint(const Dataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& s : ds.sweeps) {
    for (Eigen::Index b = 0; b < s.bins.size(); ++b) mix(std::bit_cast<std::uint32_t>(s.bins[b]));
    mix(s.label ? static_cast<std::uint32_t>(*s.label) : 0xffffffffu);
  }
  return h;
}

ShapeKind parse_shape_kind(std::string_view name) {
  if (name == "wideband-plateau") return ShapeKind::WidebandPlateau;
  if (name == "narrowband-peak") return ShapeKind::NarrowbandPeak;
  if (name == "multi-tone") return ShapeKind::MultiTone;
  if (name == "pilot-plateau") return ShapeKind::PilotPlateau;
  if (name == "noise-only") return ShapeKind::NoiseOnly;
  throw ValidationError("unknown shape kind '" + std::string(name) + "'");
}

std::string_view to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::WidebandPlateau: return "wideband-plateau";
    case ShapeKind::NarrowbandPeak: return "narrowband-peak";
    case ShapeKind::MultiTone: return "multi-tone";
    case ShapeKind::PilotPlateau: return "pilot-plateau";
    case ShapeKind::NoiseOnly: return "noise-only";
  }
  return "noise-only";
}

void SyntheticProfile::validate() const {
  if (templates.empty()) throw ValidationError("profile has no class templates");
  if (!(noise_sigma_db >= 0.0) || !std::isfinite(noise_floor_db)) {
    throw ValidationError("noise floor must be finite and sigma non-negative");
  }
  for (const auto& t : templates) {
    const std::string where = "template '" + t.name + "': ";
    if (t.name.empty()) throw ValidationError("template with empty name");
    if (t.center_lo > t.center_hi || t.center_lo < 0 || t.center_hi >= kNumBins) {
      throw ValidationError(where + "center range must lie within [0, 1023]");
    }
    if (t.width_lo < 1 || t.width_lo > t.width_hi || t.width_hi > kNumBins) {
      throw ValidationError(where + "width range must fit inside 1024 bins");
    }
    if (!(t.power_lo_db <= t.power_hi_db) || !std::isfinite(t.power_lo_db) || !std::isfinite(t.power_hi_db)) {
      throw ValidationError(where + "invalid power range");
    }
  }
}

SyntheticProfile default_profile(int num_classes, std::uint64_t seed) {
  // Shapes loosely imitate LTE-like plateaus, DVB-T-like pilots, narrowband
  // carriers, OFDM-ish tone groups and idle spectrum.
  static const std::vector<ClassTemplate> kCatalog = {
      {"wideband", ShapeKind::WidebandPlateau, 480, 544, 360, 440, 10.0, 25.0},
      {"narrowband", ShapeKind::NarrowbandPeak, 200, 824, 8, 24, 15.0, 30.0},
      {"pilot", ShapeKind::PilotPlateau, 300, 340, 140, 180, 10.0, 25.0},
      {"multitone", ShapeKind::MultiTone, 600, 700, 120, 200, 12.0, 27.0},
      {"idle", ShapeKind::NoiseOnly, 512, 512, 1, 1, 0.0, 0.0},
  };
  if (num_classes < 1 || num_classes > static_cast<int>(kCatalog.size())) {
    throw ValidationError("default profile supports 1.." + std::to_string(kCatalog.size()) + " classes");
  }
  SyntheticProfile p;
  p.templates.assign(kCatalog.begin(), kCatalog.begin() + num_classes);
  p.seed = seed;
  return p;
}

SyntheticProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open profile: " + path.string());
  SyntheticProfile p;
  try {
    const auto doc = nlohmann::json::parse(in);
    p.noise_floor_db = doc.value("noise_floor_db", p.noise_floor_db);
    p.noise_sigma_db = doc.value("noise_sigma_db", p.noise_sigma_db);
    p.seed = doc.value("seed", p.seed);
    for (const auto& t : doc.at("templates")) {
      ClassTemplate ct;
      ct.name = t.at("name").get<std::string>();
      ct.kind = parse_shape_kind(t.at("kind").get<std::string>());
      const auto c = t.value("center", std::vector<int>{512, 512});
      const auto w = t.value("width", std::vector<int>{1, 1});
      const auto pw = t.value("power_db", std::vector<double>{0.0, 0.0});
      if (c.size() != 2 || w.size() != 2 || pw.size() != 2) {
        throw ValidationError("template '" + ct.name + "': ranges must be [lo, hi] pairs");
      }
      ct.center_lo = c[0];
      ct.center_hi = c[1];
      ct.width_lo = w[0];
      ct.width_hi = w[1];
      ct.power_lo_db = pw[0];
      ct.power_hi_db = pw[1];
      p.templates.push_back(std::move(ct));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed profile: ") + e.what());
  }
  p.validate();
  return p;
}

Dataset synth_generate(const SyntheticProfile& profile, std::size_t n_per_class) {
  if (n_per_class < 1) throw PreconditionError("n_per_class must be at least 1");
  profile.validate();
  Rng rng(profile.seed);
  Dataset ds;
  ds.sweeps.reserve(n_per_class * profile.templates.size());
  for (std::size_t c = 0; c < profile.templates.size(); ++c) {
    const ClassTemplate& t = profile.templates[c];
    ds.class_names.push_back(t.name);
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const double center = static_cast<double>(rng.integer(t.center_lo, t.center_hi));
      const double width = static_cast<double>(rng.integer(t.width_lo, t.width_hi));
      const double power = rng.uniform(t.power_lo_db, t.power_hi_db);
      Sweep s;
      s.label = static_cast<int>(c);
      for (Eigen::Index b = 0; b < kNumBins; ++b) {
        const double x = static_cast<double>(b);
        double shape = 0.0;
        switch (t.kind) {
          case ShapeKind::WidebandPlateau:
            shape = power * plateau(x, center, width, 6.0);
            break;
          case ShapeKind::NarrowbandPeak:
            shape = power * triangle(x, center, std::max(width / 2.0, 1.0));
            break;
          case ShapeKind::MultiTone:
            for (int tone = 0; tone < 4; ++tone) {
              const double tc = center - width / 2.0 + width * (tone + 0.5) / 4.0;
              shape = std::max(shape, power * triangle(x, tc, 3.0));
            }
            break;
          case ShapeKind::PilotPlateau:
            shape = std::max(power * plateau(x, center, width, 3.0), (power + 6.0) * triangle(x, center, 3.0));
            break;
          case ShapeKind::NoiseOnly:
            break;
        }
        const double noise = profile.noise_sigma_db * rng.normal();
        s.bins[b] = static_cast<float>(profile.noise_floor_db + noise + shape);
      }
      s.meta["source"] = "synthetic";
      ds.sweeps.push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace rfclust
