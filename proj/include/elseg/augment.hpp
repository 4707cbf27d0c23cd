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

// Training-set augmentation: rescale, mirror, contrast, then a sliding
// window that keeps only patches with enough defect pixels.

#ifndef ELSEG_AUGMENT_HPP_
#define ELSEG_AUGMENT_HPP_

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "elseg/core.hpp"

namespace elseg {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

enum class MirrorAxis { horizontal, vertical };
enum class MirrorMode { horizontal, vertical, both };

struct MirrorFlags {
  bool horizontal = false;
  bool vertical = false;
  friend bool operator==(const MirrorFlags&, const MirrorFlags&) = default;
};

struct AugmentConfig {
  Interval scale_range{0.7, 1.3};
  int scale_steps = 5;
  Interval alpha_range{-0.4, 0.4};
  int alpha_steps = 3;
  int window_size = 256;
  int window_shift = 50;
  std::int64_t min_defect_pixels = 200;
  MirrorMode mirror = MirrorMode::both;
  std::uint64_t shuffle_seed = 0;

  void validate() const;
  /// Evenly spaced grid over scale_range (its midpoint when steps == 1).
  std::vector<double> scales() const;
  std::vector<double> alphas() const;
  /// Always includes the unmirrored variant.
  std::vector<MirrorFlags> mirrors() const;
};

AugmentConfig augment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AugmentConfig& cfg);

/// Left-right flip for MirrorAxis::horizontal, top-bottom for vertical.
template <typename Derived>
Raster<typename Derived::Scalar> mirror(const Eigen::DenseBase<Derived>& r,
                                        MirrorAxis axis) {
  if (axis == MirrorAxis::horizontal) return r.rowwise().reverse();
  return r.colwise().reverse();
}

template <typename Derived>
Raster<typename Derived::Scalar> apply_mirror(
    const Eigen::DenseBase<Derived>& r, MirrorFlags flags) {
  Raster<typename Derived::Scalar> out = r;
  if (flags.horizontal) out = mirror(out, MirrorAxis::horizontal);
  if (flags.vertical) out = mirror(out, MirrorAxis::vertical);
  return out;
}

/// Contrast transform with the image extremes M = max, m = min:
///   ((1 - alpha) M - (1 + alpha) m) (I - m) / (M - m) + m (1 + alpha)
/// Throws std::domain_error on a constant image.
template <typename Derived>
Raster<typename Derived::Scalar> contrast(const Eigen::DenseBase<Derived>& img,
                                          typename Derived::Scalar alpha) {
  using Scalar = typename Derived::Scalar;
  static_assert(std::is_floating_point_v<Scalar>);
  const Scalar hi = img.maxCoeff();
  const Scalar lo = img.minCoeff();
  if (!(hi > lo)) {
    throw std::domain_error("contrast of a constant image (max == min)");
  }
  const Scalar gain = (1 - alpha) * hi - (1 + alpha) * lo;
  return gain * (img.derived().array() - lo) / (hi - lo) + lo * (1 + alpha);
}

/// Resizes both rasters by the same factor to round(factor * dims); the
/// image bilinearly (pixel-centre aligned), the mask by nearest neighbour.
std::pair<GrayImage, BinaryMask> rescale(const GrayImage& image,
                                         const BinaryMask& mask, double factor);

GrayImage resize_bilinear(const GrayImage& image, Size size);
BinaryMask resize_nearest(const BinaryMask& mask, Size size);

struct Provenance {
  std::string source_id;
  std::size_t source_index = 0;
  Point offset;
  double scale = 1.0;
  double alpha = 0.0;
  MirrorFlags mirror;
};

nlohmann::json to_json(const Provenance& p);

struct PatchPair {
  GrayImage image;
  BinaryMask mask;
  Provenance provenance;
};

/// Window origins whose mask patch holds at least cfg.min_defect_pixels
/// defect pixels, in raster order.
std::vector<Point> defect_windows(const BinaryMask& mask,
                                  const AugmentConfig& cfg);

/// Sliding-window extraction on one (already transformed) image.
std::vector<PatchPair> extract_patches(const GrayImage& image,
                                       const BinaryMask& mask,
                                       const AugmentConfig& cfg);

struct AugmentSource {
  std::string id;
  GrayImage image;
  BinaryMask mask;
};

/// Lazily loaded sources; load(i) may hit the filesystem.
struct SourceSet {
  std::size_t count = 0;
  std::function<AugmentSource(std::size_t)> load;

  static SourceSet in_memory(std::vector<AugmentSource> sources);
  /// Training entries of the given kind.
  static SourceSet from_manifest(const DatasetManifest& manifest,
                                 DefectKind kind);
};

/// Re-derives a patch from its source and provenance.
PatchPair materialize(const AugmentSource& source, const Provenance& p,
                      int window_size);

/// Enumerates every emitted patch as a provenance record, then applies a
/// seeded permutation. Pixel data is not retained.
std::vector<Provenance> plan_patches(const SourceSet& sources,
                                     const AugmentConfig& cfg);

/// Runs the full pipeline. The visitor receives each patch with its rank in
/// the shuffled order; patches are produced source by source, so ranks
/// arrive out of order.
void generate_patches(
    const SourceSet& sources, const AugmentConfig& cfg,
    const std::function<void(std::size_t rank, const PatchPair&)>& visit);

/// Convenience for small inputs: all patches, in shuffled order.
std::vector<PatchPair> pipeline(const SourceSet& sources,
                                const AugmentConfig& cfg);

}  // namespace elseg

#endif  // ELSEG_AUGMENT_HPP_
