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

#include "elseg/augment.hpp"

#include <algorithm>
#include <memory>
#include <cmath>
#include <numeric>
#include <random>

#include "elseg/io.hpp"
#include "elseg/tiling.hpp"

namespace elseg {
namespace {

std::vector<double> grid(Interval range, int steps) {
  if (steps == 1) return {0.5 * (range.lo + range.hi)};
  std::vector<double> out(steps);
  for (int i = 0; i < steps; ++i) {
    out[i] = range.lo + (range.hi - range.lo) * i / (steps - 1);
  }
  return out;
}

std::string_view to_string(MirrorMode m) {
  switch (m) {
    case MirrorMode::horizontal:
      return "horizontal";
    case MirrorMode::vertical:
      return "vertical";
    case MirrorMode::both:
      return "both";
  }
  return "both";
}

Interval interval_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw FormatError("interval must be a two-element array");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

// Integral image with a zero first row and column.
Raster<std::int64_t> integral(const BinaryMask& mask) {
  Raster<std::int64_t> sat =
      Raster<std::int64_t>::Zero(mask.rows() + 1, mask.cols() + 1);
  for (Eigen::Index y = 0; y < mask.rows(); ++y) {
    std::int64_t run = 0;
    for (Eigen::Index x = 0; x < mask.cols(); ++x) {
      run += mask(y, x);
      sat(y + 1, x + 1) = sat(y, x + 1) + run;
    }
  }
  return sat;
}

struct Variant {
  GrayImage image;
  BinaryMask mask;
};

Variant make_variant(const AugmentSource& source, double scale,
                     MirrorFlags flags) {
  auto [image, mask] = rescale(source.image, source.mask, scale);
  return {apply_mirror(image, flags), apply_mirror(mask, flags)};
}

Variant make_mask_variant(const AugmentSource& source, double scale,
                          MirrorFlags flags) {
  const Size size{static_cast<int>(std::lround(scale * source.mask.cols())),
                  static_cast<int>(std::lround(scale * source.mask.rows()))};
  if (size.width < 1 || size.height < 1) {
    throw std::invalid_argument("rescale produces an empty image");
  }
  return {GrayImage(), apply_mirror(resize_nearest(source.mask, size), flags)};
}

struct Canonical {
  std::vector<Provenance> records;
  std::vector<std::size_t> order;  // order[rank] = canonical index
};

Canonical enumerate(const SourceSet& sources, const AugmentConfig& cfg) {
  cfg.validate();
  Canonical c;
  const auto scales = cfg.scales();
  const auto alphas = cfg.alphas();
  const auto mirrors = cfg.mirrors();
  for (std::size_t i = 0; i < sources.count; ++i) {
    const AugmentSource src = sources.load(i);
    for (double scale : scales) {
      for (MirrorFlags flags : mirrors) {
        const Variant v = make_mask_variant(src, scale, flags);
        const auto windows = defect_windows(v.mask, cfg);
        for (double alpha : alphas) {
          for (Point o : windows) {
            c.records.push_back({src.id, i, o, scale, alpha, flags});
          }
        }
      }
    }
  }
  c.order.resize(c.records.size());
  std::iota(c.order.begin(), c.order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.shuffle_seed);
  std::shuffle(c.order.begin(), c.order.end(), rng);
  return c;
}

}  // namespace

void AugmentConfig::validate() const {
  if (!(scale_range.lo > 0.0) || scale_range.hi < scale_range.lo) {
    throw std::invalid_argument("scale_range must be a sub-interval of (0, inf)");
  }
  if (!(alpha_range.lo > -1.0) || !(alpha_range.hi < 1.0) ||
      alpha_range.hi < alpha_range.lo) {
    throw std::invalid_argument("alpha_range must be a sub-interval of (-1, 1)");
  }
  if (scale_steps < 1 || alpha_steps < 1) {
    throw std::invalid_argument("grid step counts must be >= 1");
  }
  if (window_size < 1) throw std::invalid_argument("window_size must be >= 1");
  if (window_shift < 1) throw std::invalid_argument("window_shift must be >= 1");
  if (min_defect_pixels < 0) {
    throw std::invalid_argument("min_defect_pixels must be >= 0");
  }
}

std::vector<double> AugmentConfig::scales() const {
  return grid(scale_range, scale_steps);
}

std::vector<double> AugmentConfig::alphas() const {
  return grid(alpha_range, alpha_steps);
}

std::vector<MirrorFlags> AugmentConfig::mirrors() const {
  std::vector<MirrorFlags> out{{false, false}};
  if (mirror != MirrorMode::vertical) out.push_back({true, false});
  if (mirror != MirrorMode::horizontal) out.push_back({false, true});
  return out;
}

AugmentConfig augment_config_from_json(const nlohmann::json& j) {
  AugmentConfig cfg;
  try {
    if (j.contains("scale_range")) cfg.scale_range = interval_from_json(j["scale_range"]);
    if (j.contains("alpha_range")) cfg.alpha_range = interval_from_json(j["alpha_range"]);
    cfg.scale_steps = j.value("scale_steps", cfg.scale_steps);
    cfg.alpha_steps = j.value("alpha_steps", cfg.alpha_steps);
    cfg.window_size = j.value("window_size", cfg.window_size);
    cfg.window_shift = j.value("window_shift", cfg.window_shift);
    cfg.min_defect_pixels = j.value("min_defect_pixels", cfg.min_defect_pixels);
    cfg.shuffle_seed = j.value("shuffle_seed", cfg.shuffle_seed);
    if (j.contains("mirror")) {
      const auto m = j["mirror"].get<std::string>();
      if (m == "horizontal") {
        cfg.mirror = MirrorMode::horizontal;
      } else if (m == "vertical") {
        cfg.mirror = MirrorMode::vertical;
      } else if (m == "both") {
        cfg.mirror = MirrorMode::both;
      } else {
        throw FormatError("unknown mirror mode '" + m + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed augment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const AugmentConfig& cfg) {
  return {{"scale_range", {cfg.scale_range.lo, cfg.scale_range.hi}},
          {"scale_steps", cfg.scale_steps},
          {"alpha_range", {cfg.alpha_range.lo, cfg.alpha_range.hi}},
          {"alpha_steps", cfg.alpha_steps},
          {"window_size", cfg.window_size},
          {"window_shift", cfg.window_shift},
          {"min_defect_pixels", cfg.min_defect_pixels},
          {"mirror", std::string(to_string(cfg.mirror))},
          {"shuffle_seed", cfg.shuffle_seed}};
}

nlohmann::json to_json(const Provenance& p) {
  return {{"source", p.source_id},
          {"source_index", p.source_index},
          {"x", p.offset.x},
          {"y", p.offset.y},
          {"scale", p.scale},
          {"alpha", p.alpha},
          {"mirror_h", p.mirror.horizontal},
          {"mirror_v", p.mirror.vertical}};
}

GrayImage resize_bilinear(const GrayImage& image, Size size) {
  const double sy = static_cast<double>(image.rows()) / size.height;
  const double sx = static_cast<double>(image.cols()) / size.width;
  const Eigen::Index last_y = image.rows() - 1;
  const Eigen::Index last_x = image.cols() - 1;
  GrayImage out(size.height, size.width);
  for (int y = 0; y < size.height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(last_y));
    const auto y0 = static_cast<Eigen::Index>(fy);
    const Eigen::Index y1 = std::min(y0 + 1, last_y);
    const double wy = fy - y0;
    for (int x = 0; x < size.width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(last_x));
      const auto x0 = static_cast<Eigen::Index>(fx);
      const Eigen::Index x1 = std::min(x0 + 1, last_x);
      const double wx = fx - x0;
      const double top = image(y0, x0) + wx * (image(y0, x1) - image(y0, x0));
      const double bottom =
          image(y1, x0) + wx * (image(y1, x1) - image(y1, x0));
      out(y, x) = top + wy * (bottom - top);
    }
  }
  return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, Size size) {
  const double sy = static_cast<double>(mask.rows()) / size.height;
  const double sx = static_cast<double>(mask.cols()) / size.width;
  BinaryMask out(size.height, size.width);
  for (int y = 0; y < size.height; ++y) {
    const auto yy = std::min<Eigen::Index>(
        static_cast<Eigen::Index>((y + 0.5) * sy), mask.rows() - 1);
    for (int x = 0; x < size.width; ++x) {
      const auto xx = std::min<Eigen::Index>(
          static_cast<Eigen::Index>((x + 0.5) * sx), mask.cols() - 1);
      out(y, x) = mask(yy, xx);
    }
  }
  return out;
}

std::pair<GrayImage, BinaryMask> rescale(const GrayImage& image,
                                         const BinaryMask& mask,
                                         double factor) {
  if (image.rows() != mask.rows() || image.cols() != mask.cols()) {
    throw std::invalid_argument("image and mask dimensions differ");
  }
  if (!(factor > 0.0)) throw std::invalid_argument("scale factor must be > 0");
  const Size size{static_cast<int>(std::lround(factor * image.cols())),
                  static_cast<int>(std::lround(factor * image.rows()))};
  if (size.width < 1 || size.height < 1) {
    throw std::invalid_argument("rescale produces an empty image");
  }
  return {resize_bilinear(image, size), resize_nearest(mask, size)};
}

std::vector<Point> defect_windows(const BinaryMask& mask,
                                  const AugmentConfig& cfg) {
  const int n = cfg.window_size;
  if (mask.cols() < n || mask.rows() < n) return {};
  const auto xs = window_offsets(static_cast<int>(mask.cols()), n,
                                 cfg.window_shift);
  const auto ys = window_offsets(static_cast<int>(mask.rows()), n,
                                 cfg.window_shift);
  const auto sat = integral(mask);
  std::vector<Point> out;
  for (int y : ys) {
    for (int x : xs) {
      const std::int64_t count =
          sat(y + n, x + n) - sat(y, x + n) - sat(y + n, x) + sat(y, x);
      if (count >= cfg.min_defect_pixels) out.push_back({x, y});
    }
  }
  return out;
}

std::vector<PatchPair> extract_patches(const GrayImage& image,
                                       const BinaryMask& mask,
                                       const AugmentConfig& cfg) {
  if (image.rows() != mask.rows() || image.cols() != mask.cols()) {
    throw std::invalid_argument("image and mask dimensions differ");
  }
  const int n = cfg.window_size;
  std::vector<PatchPair> out;
  for (Point o : defect_windows(mask, cfg)) {
    PatchPair p;
    p.image = image.block(o.y, o.x, n, n);
    p.mask = mask.block(o.y, o.x, n, n);
    p.provenance.offset = o;
    out.push_back(std::move(p));
  }
  return out;
}

SourceSet SourceSet::in_memory(std::vector<AugmentSource> sources) {
  auto shared =
      std::make_shared<const std::vector<AugmentSource>>(std::move(sources));
  return {shared->size(), [shared](std::size_t i) { return (*shared)[i]; }};
}

SourceSet SourceSet::from_manifest(const DatasetManifest& manifest,
                                   DefectKind kind) {
  std::vector<ManifestEntry> entries;
  for (const auto& e : manifest.select(kind, Split::train)) {
    if (e.mask) entries.push_back(e);
  }
  if (entries.empty()) {
    throw std::invalid_argument("manifest has no labelled " +
                                std::string(to_string(kind)) +
                                " training images");
  }
  auto shared = std::make_shared<const std::vector<ManifestEntry>>(entries);
  auto root = std::make_shared<const DatasetManifest>(manifest);
  return {shared->size(), [shared, root](std::size_t i) {
            const ManifestEntry& e = (*shared)[i];
            AugmentSource s{e.image_id(), load_image(root->resolve(e.image)),
                            load_mask(root->resolve(*e.mask))};
            if (s.image.rows() != s.mask.rows() ||
                s.image.cols() != s.mask.cols()) {
              throw std::invalid_argument("mask of '" + e.image.string() +
                                          "' does not match the image size");
            }
            return s;
          }};
}

PatchPair materialize(const AugmentSource& source, const Provenance& p,
                      int window_size) {
  Variant v = make_variant(source, p.scale, p.mirror);
  const GrayImage adjusted = contrast(v.image, p.alpha);
  return {adjusted.block(p.offset.y, p.offset.x, window_size, window_size),
          v.mask.block(p.offset.y, p.offset.x, window_size, window_size), p};
}

std::vector<Provenance> plan_patches(const SourceSet& sources,
                                     const AugmentConfig& cfg) {
  Canonical c = enumerate(sources, cfg);
  std::vector<Provenance> out;
  out.reserve(c.order.size());
  for (std::size_t idx : c.order) out.push_back(c.records[idx]);
  return out;
}

void generate_patches(
    const SourceSet& sources, const AugmentConfig& cfg,
    const std::function<void(std::size_t rank, const PatchPair&)>& visit) {
  const Canonical c = enumerate(sources, cfg);
  std::vector<std::size_t> rank(c.order.size());
  for (std::size_t r = 0; r < c.order.size(); ++r) rank[c.order[r]] = r;

  const int n = cfg.window_size;
  std::size_t i = 0;
  while (i < c.records.size()) {
    const Provenance& head = c.records[i];
    const AugmentSource src = sources.load(head.source_index);
    // Records of one source are contiguous, grouped by scale and mirror.
    while (i < c.records.size() &&
           c.records[i].source_index == head.source_index) {
      const Provenance& group = c.records[i];
      const Variant v = make_variant(src, group.scale, group.mirror);
      while (i < c.records.size() &&
             c.records[i].source_index == group.source_index &&
             c.records[i].scale == group.scale &&
             c.records[i].mirror == group.mirror) {
        const double alpha = c.records[i].alpha;
        const GrayImage adjusted = contrast(v.image, alpha);
        for (; i < c.records.size() &&
               c.records[i].source_index == group.source_index &&
               c.records[i].scale == group.scale &&
               c.records[i].mirror == group.mirror &&
               c.records[i].alpha == alpha;
             ++i) {
          const Provenance& p = c.records[i];
          visit(rank[i],
                PatchPair{adjusted.block(p.offset.y, p.offset.x, n, n),
                          v.mask.block(p.offset.y, p.offset.x, n, n), p});
        }
      }
    }
  }
}

std::vector<PatchPair> pipeline(const SourceSet& sources,
                                const AugmentConfig& cfg) {
  std::vector<PatchPair> out;
  std::vector<std::size_t> ranks;
  generate_patches(sources, cfg, [&](std::size_t rank, const PatchPair& p) {
    out.push_back(p);
    ranks.push_back(rank);
  });
  std::vector<PatchPair> ordered(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    ordered[ranks[k]] = std::move(out[k]);
  }
  return ordered;
}

}  // namespace elseg
