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

// Synthetic thin-film EL module images with exact ground-truth masks.

#ifndef ELSEG_SYNTH_HPP_
#define ELSEG_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "elseg/core.hpp"

namespace elseg {

struct Point2d {
  double x = 0.0;
  double y = 0.0;
};

/// Dark region with radially decaying attenuation severity * exp(-d/radius),
/// clipped to the cell stripe segment holding the centre. Ground truth is
/// where attenuation exceeds half its peak.
struct ShuntSpec {
  Point2d center;
  double severity = 0.6;  // (0, 1]
  double radius = 12.0;
};

/// Bright stain: gain 1 + (brightness_gain - 1) * exp(-(d - radius)^2 /
/// (2 ring_width^2)). Ground truth is where the excess gain exceeds half its
/// peak.
struct DropletSpec {
  Point2d center;
  double brightness_gain = 1.5;  // > 1
  double radius = 12.0;
  double ring_width = 2.5;
};

struct SynthSpec {
  ModuleGeometry geometry = ModuleGeometry::standard();
  double base_intensity = 1000.0;
  /// Brightness of interconnect and isolation lines relative to cells.
  double line_factor = 0.3;
  /// One multiplier per stitch patch, row-major over the patch grid
  /// (horizontal stitch lines + 1) x (vertical stitch lines + 1).
  std::vector<double> patch_offsets;
  double noise_sigma = 0.0;
  std::vector<ShuntSpec> shunts;
  std::vector<DropletSpec> droplets;
  std::uint64_t seed = 0;

  void validate() const;

  /// Standard geometry with mildly differing patch intensities and no
  /// defects.
  static SynthSpec standard();
};

SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthSpec& spec);

struct Rendered {
  GrayImage image;
  BinaryMask shunt_mask;
  BinaryMask droplet_mask;
};

/// Deterministic in (spec, seed). Noise is added after the defects and never
/// alters the masks.
Rendered render(const SynthSpec& spec);

/// Index of the stitch patch holding pixel (x, y).
int patch_index(const ModuleGeometry& g, int x, int y);

/// Non-negative sampling weights over the image, stretched to the module
/// extent. Any resolution.
using DensityPrior = Raster<double>;

/// Draws a position from the prior (uniform when absent).
Point2d sample_position(const ModuleGeometry& g,
                        const std::optional<DensityPrior>& prior,
                        std::mt19937_64& rng);

struct CorpusOptions {
  int count = 10;
  double train_fraction = 0.6;
  double test_fraction = 0.2;  // the remainder goes to the final split
  /// Minimum distance between defect centres within one module.
  double min_separation = 40.0;
};

struct CorpusItem {
  std::string id;
  Split split = Split::train;
  SynthSpec spec;
};

/// One spec per module: the template's defects at freshly drawn positions,
/// with per-module seeds. Throws std::invalid_argument when count < 1.
std::vector<CorpusItem> plan_corpus(const SynthSpec& tmpl,
                                    const CorpusOptions& options,
                                    const std::optional<DensityPrior>& prior);

struct Corpus {
  std::vector<Rendered> items;
  DatasetManifest manifest;
};

/// Manifest rows for a planned corpus: images/<id>.png with
/// masks/<kind>/<id>.png, both kinds for every module.
DatasetManifest corpus_manifest(const std::vector<CorpusItem>& items);

Corpus render_corpus(const SynthSpec& tmpl, const CorpusOptions& options,
                     const std::optional<DensityPrior>& prior);

/// Renders and writes one planned module under out_dir.
void write_corpus_item(const CorpusItem& item,
                       const std::filesystem::path& out_dir);

}  // namespace elseg

#endif  // ELSEG_SYNTH_HPP_
