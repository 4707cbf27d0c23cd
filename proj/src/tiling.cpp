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

#include "elseg/tiling.hpp"

#include <stdexcept>
#include <string>

namespace elseg {

std::vector<int> window_offsets(int extent, int window, int shift) {
  if (window < 1 || shift < 1) {
    throw std::invalid_argument("window and shift must be >= 1");
  }
  if (window > extent) {
    throw std::invalid_argument("window of " + std::to_string(window) +
                                " px exceeds image extent of " +
                                std::to_string(extent) + " px");
  }
  std::vector<int> out;
  int offset = 0;
  for (; offset + window < extent; offset += shift) out.push_back(offset);
  const int last = extent - window;
  if (out.empty() || out.back() != last) out.push_back(last);
  return out;
}

std::vector<Point> TilingPlan::offsets() const {
  std::vector<Point> out;
  out.reserve(x_offsets.size() * y_offsets.size());
  for (int y : y_offsets) {
    for (int x : x_offsets) out.push_back({x, y});
  }
  return out;
}

TilingPlan::Rect TilingPlan::kept_region(Point o) const {
  Rect r{o.x + trim, o.y + trim, o.x + patch_size - trim,
         o.y + patch_size - trim};
  if (o.x == 0) r.x0 = 0;
  if (o.y == 0) r.y0 = 0;
  if (o.x + patch_size == image.width) r.x1 = image.width;
  if (o.y + patch_size == image.height) r.y1 = image.height;
  return r;
}

Raster<int> coverage(const TilingPlan& plan) {
  Raster<int> votes = Raster<int>::Zero(plan.image.height, plan.image.width);
  for (const Point o : plan.offsets()) {
    const auto r = plan.kept_region(o);
    votes.block(r.y0, r.x0, r.y1 - r.y0, r.x1 - r.x0) += 1;
  }
  return votes;
}

void TilingPlan::validate() const {
  if (shift < 1 || shift > patch_size) {
    throw std::invalid_argument("tiling shift must lie in [1, patch_size]");
  }
  if (trim < 0 || 2 * trim >= patch_size) {
    throw std::invalid_argument("tiling trim must satisfy 0 <= 2*trim < patch");
  }
  if (patch_size > image.width || patch_size > image.height) {
    throw std::invalid_argument("patch of " + std::to_string(patch_size) +
                                " px exceeds image of " +
                                std::to_string(image.width) + "x" +
                                std::to_string(image.height));
  }
  if ((coverage(*this) == 0).any()) {
    throw std::invalid_argument("tiling plan leaves pixels uncovered");
  }
}

TilingPlan plan(Size image, int patch_size, int shift, int trim) {
  if (patch_size > image.width || patch_size > image.height) {
    throw std::invalid_argument("patch of " + std::to_string(patch_size) +
                                " px exceeds image of " +
                                std::to_string(image.width) + "x" +
                                std::to_string(image.height));
  }
  TilingPlan p;
  p.image = image;
  p.patch_size = patch_size;
  p.shift = shift;
  p.trim = trim;
  if (shift < 1 || shift > patch_size) {
    throw std::invalid_argument("tiling shift must lie in [1, patch_size]");
  }
  p.x_offsets = window_offsets(image.width, patch_size, shift);
  p.y_offsets = window_offsets(image.height, patch_size, shift);
  p.validate();
  return p;
}

TilingPlan plan(Size image, int patch_size) {
  return plan(image, patch_size, patch_size - kDefaultOverlap, kDefaultTrim);
}

BinaryMask segment_full(const GrayImage& image, const Segmenter& segmenter,
                        const TilingPlan& plan) {
  if (size_of(image) != plan.image) {
    throw std::invalid_argument("tiling plan was made for another image size");
  }
  BinaryMask out = BinaryMask::Constant(image.rows(), image.cols(), false);
  Raster<int> votes = Raster<int>::Zero(image.rows(), image.cols());
  const int n = plan.patch_size;
  for (const Point o : plan.offsets()) {
    const GrayImage patch = image.block(o.y, o.x, n, n);
    const BinaryMask pred = segmenter.predict(patch);
    if (pred.rows() != n || pred.cols() != n) {
      throw std::runtime_error("segmenter '" + segmenter.spec().id +
                               "' changed the patch dimensions");
    }
    const auto r = plan.kept_region(o);
    const int h = r.y1 - r.y0;
    const int w = r.x1 - r.x0;
    out.block(r.y0, r.x0, h, w) =
        out.block(r.y0, r.x0, h, w) ||
        pred.block(r.y0 - o.y, r.x0 - o.x, h, w);
    votes.block(r.y0, r.x0, h, w) += 1;
  }
  if ((votes == 0).any()) {
    throw std::logic_error("tiling left pixels without a vote");
  }
  return out;
}

BinaryMask segment_full(const GrayImage& image, const Segmenter& segmenter) {
  return segment_full(image, segmenter,
                      plan(size_of(image), segmenter.spec().input_size));
}

}  // namespace elseg
