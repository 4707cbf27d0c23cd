/* Copyright 2026 The elseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Population statistics over many segmented modules.

#ifndef ELSEG_AGGREGATE_HPP_
#define ELSEG_AGGREGATE_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "elseg/core.hpp"

namespace elseg {

/// Per-pixel defect counts over a population of masks.
class HeatMap {
 public:
  HeatMap() = default;
  explicit HeatMap(Size grid);

  /// Adds one mask, resampled by nearest neighbour onto the grid. The first
  /// mask fixes the grid of a default-constructed map.
  void add(const BinaryMask& mask);
  /// Pixel-wise sum; grids must match.
  void merge(const HeatMap& other);

  Size grid() const { return size_of(counts_); }
  std::int64_t n_images() const { return n_images_; }
  const Raster<std::int64_t>& counts() const { return counts_; }
  Raster<double> probability() const;

  friend bool operator==(const HeatMap& a, const HeatMap& b) {
    return a.n_images_ == b.n_images_ && a.counts_.rows() == b.counts_.rows() &&
           a.counts_.cols() == b.counts_.cols() &&
           (a.counts_ == b.counts_).all();
  }

 private:
  Raster<std::int64_t> counts_;
  std::int64_t n_images_ = 0;
};

/// Throws std::invalid_argument on an empty input.
HeatMap accumulate(std::span<const BinaryMask> masks);

enum class HeatScale { linear, log };

struct HeatLegend {
  HeatScale scale = HeatScale::linear;
  double clip_percentile = 0.0;
  /// Pre-normalisation value rendered as full white.
  double white_level = 0.0;
  std::int64_t n_images = 0;
  /// probability[k] is the defect probability shown by grey level k.
  std::vector<double> probability;

  nlohmann::json to_json() const;
};

struct HeatRender {
  GrayImage image;  // 8-bit grey levels 0..255
  HeatLegend legend;
};

/// Pre-normalisation value of a pixel: probability (linear) or
/// log(1 + count) (log).
double heat_value(std::int64_t count, std::int64_t n_images, HeatScale scale);

/// Grey level = 255 * min(1, value / white_level), where white_level is the
/// (100 - clip_percentile) nearest-rank percentile of the non-zero values,
/// so the brightest clip_percentile % of observations saturate. An all-zero
/// map renders black.
HeatRender render_heatmap(const HeatMap& map, HeatScale scale,
                          double clip_percentile);

struct PerformanceRecord {
  std::string image_id;
  std::map<std::string, double> values;  // e.g. "isc_slope"
};

struct ScatterRow {
  std::string image_id;
  double count = 0.0;
  double performance = 0.0;
};

struct Correlation {
  double pearson_r = 0.0;
  std::vector<ScatterRow> scatter;
};

/// Pearson r between x and y. Throws std::invalid_argument when either has
/// zero variance or fewer than three points are given.
double pearson(std::span<const double> x, std::span<const double> y);

/// Inner join on image id, then Pearson r between component count and the
/// chosen performance key.
Correlation correlate(std::span<const std::pair<std::string, double>> counts,
                      std::span<const PerformanceRecord> perf,
                      const std::string& key);

}  // namespace elseg

#endif  // ELSEG_AGGREGATE_HPP_
