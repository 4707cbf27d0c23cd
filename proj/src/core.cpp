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

#include "elseg/core.hpp"

#include <cmath>
#include <set>
#include <utility>

namespace elseg {

std::string_view to_string(DefectKind kind) {
  return kind == DefectKind::shunt ? "shunt" : "droplet";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::test:
      return "test";
    case Split::final:
      return "final";
  }
  return "train";
}

DefectKind parse_defect_kind(std::string_view text) {
  if (text == "shunt") return DefectKind::shunt;
  if (text == "droplet") return DefectKind::droplet;
  throw FormatError("unknown defect kind '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  if (text == "final") return Split::final;
  throw FormatError("unknown split '" + std::string(text) + "'");
}

void validate_image(const GrayImage& image) {
  if (image.rows() < 1 || image.cols() < 1) {
    throw std::invalid_argument("image has a zero dimension");
  }
  if (!image.isFinite().all()) {
    throw std::invalid_argument("image contains non-finite intensities");
  }
  if ((image < 0.0).any()) {
    throw std::invalid_argument("image contains negative intensities");
  }
}

int ModuleGeometry::width() const {
  return submodule_count * submodule_width +
         (submodule_count - 1) * isolation_line_width;
}

int ModuleGeometry::height() const { return cell_count * cell_pitch; }

int ModuleGeometry::horizontal_stitch_count() const {
  int n = 0;
  for (const auto& line : stitch_lines) {
    n += line.orientation == Orientation::horizontal;
  }
  return n;
}

int ModuleGeometry::vertical_stitch_count() const {
  return static_cast<int>(stitch_lines.size()) - horizontal_stitch_count();
}

int ModuleGeometry::cell_of_row(int y) const { return y / cell_pitch; }

int ModuleGeometry::submodule_of_column(int x) const {
  const int period = submodule_width + isolation_line_width;
  const int index = x / period;
  if (x - index * period >= submodule_width) return -1;
  return index;
}

bool ModuleGeometry::is_interconnect_row(int y) const {
  const int cell = cell_of_row(y);
  if (cell >= cell_count - 1) return false;
  return y - cell * cell_pitch >= cell_pitch - interconnect_width;
}

bool ModuleGeometry::is_isolation_column(int x) const {
  return submodule_of_column(x) < 0;
}

void ModuleGeometry::validate() const {
  if (cell_count < 1) throw std::invalid_argument("cell_count must be >= 1");
  if (submodule_count < 1) {
    throw std::invalid_argument("submodule_count must be >= 1");
  }
  if (cell_pitch < 1 || interconnect_width < 1 || isolation_line_width < 1 ||
      submodule_width < 1) {
    throw std::invalid_argument("geometry widths must be >= 1 pixel");
  }
  if (interconnect_width >= cell_pitch) {
    throw std::invalid_argument("interconnect_width must be < cell_pitch");
  }
  for (const auto& line : stitch_lines) {
    const int extent =
        line.orientation == Orientation::horizontal ? height() : width();
    if (line.position <= 0 || line.position >= extent) {
      throw std::invalid_argument("stitch line outside the image");
    }
  }
}

ModuleGeometry ModuleGeometry::standard() {
  ModuleGeometry g;
  const int w = g.width();
  const int h = g.height();
  g.stitch_lines = {{Orientation::horizontal, h / 2},
                    {Orientation::vertical, w / 4},
                    {Orientation::vertical, w / 2},
                    {Orientation::vertical, 3 * w / 4}};
  return g;
}

std::string ManifestEntry::image_id() const { return image.stem().string(); }

std::filesystem::path DatasetManifest::resolve(
    const std::filesystem::path& p) const {
  return p.is_absolute() ? p : root / p;
}

std::vector<ManifestEntry> DatasetManifest::select(DefectKind kind,
                                                   Split split) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (e.kind == kind && e.split == split) out.push_back(e);
  }
  return out;
}

std::size_t DatasetManifest::count(DefectKind kind, Split split) const {
  std::size_t n = 0;
  for (const auto& e : entries) n += (e.kind == kind && e.split == split);
  return n;
}

void DatasetManifest::validate() const {
  std::set<std::pair<std::string, DefectKind>> images;
  std::set<std::string> masks;
  for (const auto& e : entries) {
    if (!images.emplace(e.image.generic_string(), e.kind).second) {
      throw FormatError("duplicate manifest entry for image '" +
                        e.image.generic_string() + "' (" +
                        std::string(to_string(e.kind)) + ")");
    }
    if (e.mask) {
      if (!masks.insert(e.mask->generic_string()).second) {
        throw FormatError("duplicate mask path '" + e.mask->generic_string() +
                          "'");
      }
    } else if (e.split != Split::train) {
      throw FormatError("entry '" + e.image.generic_string() + "' in split " +
                        std::string(to_string(e.split)) + " has no mask");
    }
  }
}

}  // namespace elseg
