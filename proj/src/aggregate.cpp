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

#include "elseg/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "elseg/augment.hpp"

namespace elseg {

HeatMap::HeatMap(Size grid)
    : counts_(Raster<std::int64_t>::Zero(grid.height, grid.width)) {
  if (grid.width < 1 || grid.height < 1) {
    throw std::invalid_argument("heat map grid must be non-empty");
  }
}

void HeatMap::add(const BinaryMask& mask) {
  if (mask.size() == 0) throw std::invalid_argument("empty mask");
  if (counts_.size() == 0) {
    counts_ = Raster<std::int64_t>::Zero(mask.rows(), mask.cols());
  }
  if (size_of(mask) == grid()) {
    counts_ += mask.cast<std::int64_t>();
  } else {
    counts_ += resize_nearest(mask, grid()).cast<std::int64_t>();
  }
  ++n_images_;
}

void HeatMap::merge(const HeatMap& other) {
  if (other.n_images_ == 0) return;
  if (n_images_ == 0 && counts_.size() == 0) {
    *this = other;
    return;
  }
  if (other.grid() != grid()) {
    throw std::invalid_argument("cannot merge heat maps on different grids");
  }
  counts_ += other.counts_;
  n_images_ += other.n_images_;
}

Raster<double> HeatMap::probability() const {
  if (n_images_ == 0) throw std::logic_error("heat map holds no images");
  return counts_.cast<double>() / static_cast<double>(n_images_);
}

HeatMap accumulate(std::span<const BinaryMask> masks) {
  if (masks.empty()) throw std::invalid_argument("no masks to accumulate");
  HeatMap map;
  for (const auto& m : masks) map.add(m);
  return map;
}

double heat_value(std::int64_t count, std::int64_t n_images, HeatScale scale) {
  if (scale == HeatScale::log) return std::log1p(static_cast<double>(count));
  return static_cast<double>(count) / static_cast<double>(n_images);
}

nlohmann::json HeatLegend::to_json() const {
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t k = 0; k < probability.size(); ++k) {
    levels.push_back({{"pixel", k}, {"probability", probability[k]}});
  }
  return {{"scale", scale == HeatScale::log ? "log" : "linear"},
          {"clip_percentile", clip_percentile},
          {"white_level", white_level},
          {"n_images", n_images},
          {"levels", levels}};
}

HeatRender render_heatmap(const HeatMap& map, HeatScale scale,
                          double clip_percentile) {
  if (!(clip_percentile >= 0.0) || !(clip_percentile < 100.0)) {
    throw std::invalid_argument("clip percentile must lie in [0, 100)");
  }
  if (map.n_images() == 0) throw std::invalid_argument("heat map holds no images");
  const auto& counts = map.counts();
  const std::int64_t n = map.n_images();

  std::vector<double> observed;
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    if (counts.data()[i] > 0) {
      observed.push_back(heat_value(counts.data()[i], n, scale));
    }
  }
  HeatRender out;
  out.legend.scale = scale;
  out.legend.clip_percentile = clip_percentile;
  out.legend.n_images = n;
  out.image = GrayImage::Zero(counts.rows(), counts.cols());
  if (!observed.empty()) {
    const double q = (100.0 - clip_percentile) / 100.0;
    auto rank = static_cast<std::size_t>(
        std::ceil(q * static_cast<double>(observed.size())));
    rank = std::clamp<std::size_t>(rank, 1, observed.size());
    std::nth_element(observed.begin(), observed.begin() + (rank - 1),
                     observed.end());
    out.legend.white_level = observed[rank - 1];
    const double white = out.legend.white_level;
    for (Eigen::Index i = 0; i < counts.size(); ++i) {
      const double v = heat_value(counts.data()[i], n, scale);
      out.image.data()[i] = std::round(255.0 * std::min(1.0, v / white));
    }
  }
  out.legend.probability.resize(256);
  for (int k = 0; k < 256; ++k) {
    const double v = out.legend.white_level * k / 255.0;
    out.legend.probability[k] =
        scale == HeatScale::log ? std::expm1(v) / static_cast<double>(n) : v;
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("length mismatch");
  if (x.size() < 3) throw std::invalid_argument("need at least 3 joined records");
  const Eigen::Map<const Eigen::ArrayXd> xs(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::Map<const Eigen::ArrayXd> ys(y.data(), static_cast<Eigen::Index>(y.size()));
  const Eigen::ArrayXd dx = xs - xs.mean();
  const Eigen::ArrayXd dy = ys - ys.mean();
  const double sxx = dx.square().sum();
  const double syy = dy.square().sum();
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    throw std::invalid_argument("zero variance; correlation undefined");
  }
  return std::clamp((dx * dy).sum() / std::sqrt(sxx * syy), -1.0, 1.0);
}

Correlation correlate(std::span<const std::pair<std::string, double>> counts,
                      std::span<const PerformanceRecord> perf,
                      const std::string& key) {
  std::unordered_map<std::string, double> by_id;
  for (const auto& rec : perf) {
    const auto it = rec.values.find(key);
    if (it == rec.values.end()) {
      throw std::invalid_argument("performance record '" + rec.image_id +
                                  "' lacks '" + key + "'");
    }
    if (!std::isfinite(it->second)) {
      throw std::invalid_argument("non-finite performance value for '" +
                                  rec.image_id + "'");
    }
    by_id[rec.image_id] = it->second;
  }
  Correlation out;
  std::vector<double> xs, ys;
  for (const auto& [id, count] : counts) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) continue;
    out.scatter.push_back({id, count, it->second});
    xs.push_back(count);
    ys.push_back(it->second);
  }
  out.pearson_r = pearson(xs, ys);
  return out;
}

}  // namespace elseg
