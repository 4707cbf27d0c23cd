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

// Domain types shared by every stage of the pipeline.
//
// Rasters are Eigen arrays stored row-major: rows() is the image height,
// cols() the width, and coeff(y, x) addresses the pixel at column x, row y.

#ifndef ELSEG_CORE_HPP_
#define ELSEG_CORE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace elseg {

template <typename Scalar>
using Raster =
    Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Single-channel EL intensity raster. Values are non-negative reals.
using GrayImage = Raster<double>;
/// Per-pixel defect indicator.
using BinaryMask = Raster<bool>;
/// Component labels, 0 is background.
using LabelImage = Raster<std::int32_t>;

/// Thrown when on-disk data cannot be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a document (manifest, config, CSV) is malformed.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct Size {
  int width = 0;
  int height = 0;
  friend bool operator==(const Size&, const Size&) = default;
};

template <typename Derived>
Size size_of(const Eigen::DenseBase<Derived>& raster) {
  return {static_cast<int>(raster.cols()), static_cast<int>(raster.rows())};
}

enum class DefectKind { shunt, droplet };
enum class Split { train, test, final };
enum class Connectivity { four = 4, eight = 8 };

std::string_view to_string(DefectKind kind);
std::string_view to_string(Split split);
DefectKind parse_defect_kind(std::string_view text);
Split parse_split(std::string_view text);

/// Throws std::invalid_argument unless the image is non-empty with finite,
/// non-negative intensities.
void validate_image(const GrayImage& image);

/// Number of true pixels.
template <typename Derived>
std::int64_t popcount(const Eigen::DenseBase<Derived>& mask) {
  return static_cast<std::int64_t>(mask.derived().template cast<int>().sum());
}

enum class Orientation { horizontal, vertical };

struct StitchLine {
  Orientation orientation = Orientation::horizontal;
  int position = 0;  // row for horizontal lines, column for vertical lines
};

/// Layout of a monolithic thin-film module as it appears in the EL image.
///
/// Cells are horizontal stripes stacked top to bottom; each occupies
/// cell_pitch rows, the last interconnect_width of which form the dark
/// interconnection line to the next cell (the bottom cell has none).
/// Submodules sit side by side, separated by dark vertical isolation lines.
struct ModuleGeometry {
  int cell_count = 150;
  int submodule_count = 5;
  int cell_pitch = 12;
  int interconnect_width = 2;
  int isolation_line_width = 3;
  int submodule_width = 120;
  std::vector<StitchLine> stitch_lines;

  int width() const;
  int height() const;

  int horizontal_stitch_count() const;
  int vertical_stitch_count() const;

  /// Index of the cell stripe containing row y.
  int cell_of_row(int y) const;
  /// Index of the submodule containing column x, or -1 on an isolation line.
  int submodule_of_column(int x) const;
  bool is_interconnect_row(int y) const;
  bool is_isolation_column(int x) const;

  /// Throws std::invalid_argument if any invariant is violated.
  void validate() const;

  /// 150 cells, 5 submodules, one horizontal and three vertical stitch lines.
  static ModuleGeometry standard();
};

struct ManifestEntry {
  std::filesystem::path image;
  std::optional<std::filesystem::path> mask;
  DefectKind kind = DefectKind::shunt;
  Split split = Split::train;

  /// File stem of the image, used to key predictions and metric rows.
  std::string image_id() const;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
  std::vector<ManifestEntry> select(DefectKind kind, Split split) const;
  std::size_t count(DefectKind kind, Split split) const;

  /// Throws FormatError on duplicate (image, kind) pairs, duplicate masks, or
  /// test/final entries without a mask.
  void validate() const;
};

}  // namespace elseg

#endif  // ELSEG_CORE_HPP_
