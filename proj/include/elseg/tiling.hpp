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

#ifndef ELSEG_TILING_HPP_
#define ELSEG_TILING_HPP_

#include <vector>

#include "elseg/core.hpp"
#include "elseg/segmenter.hpp"

namespace elseg {

/// Window origins 0, shift, 2*shift, ... along one axis; the last origin is
/// clamped to extent - window so the far edge is always covered.
std::vector<int> window_offsets(int extent, int window, int shift);

struct TilingPlan {
  Size image;
  int patch_size = 256;
  int shift = 246;
  int trim = 5;
  std::vector<int> x_offsets;
  std::vector<int> y_offsets;

  std::vector<Point> offsets() const;

  /// Region of the window at the given origin that survives trimming: the
  /// frame is dropped except along the image boundary. Returned as
  /// [x0, x1) x [y0, y1).
  struct Rect {
    int x0, y0, x1, y1;
  };
  Rect kept_region(Point origin) const;

  /// Throws std::invalid_argument if an invariant is violated or some pixel
  /// lies in no kept region.
  void validate() const;
};

inline constexpr int kDefaultOverlap = 10;
inline constexpr int kDefaultTrim = 5;

/// Shift is patch_size - 10 and trim 5, so neighbouring kept regions abut.
TilingPlan plan(Size image, int patch_size);
TilingPlan plan(Size image, int patch_size, int shift, int trim);

/// Number of kept regions covering each pixel.
Raster<int> coverage(const TilingPlan& plan);

/// Predicts every window independently and ORs the kept regions.
BinaryMask segment_full(const GrayImage& image, const Segmenter& segmenter,
                        const TilingPlan& plan);

/// Convenience: plans with the segmenter's input size.
BinaryMask segment_full(const GrayImage& image, const Segmenter& segmenter);

}  // namespace elseg

#endif  // ELSEG_TILING_HPP_
