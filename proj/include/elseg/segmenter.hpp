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

#ifndef ELSEG_SEGMENTER_HPP_
#define ELSEG_SEGMENTER_HPP_

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "elseg/core.hpp"

namespace elseg {

enum class Encoder { mobilenet, resnet, vgg, unet, classical };
enum class Decoder { unet, fcn, psp, segnet, classical };

std::string_view to_string(Encoder e);
std::string_view to_string(Decoder d);
Encoder parse_encoder(std::string_view text);
Decoder parse_decoder(std::string_view text);

struct SizeConstraint {
  enum class Kind { fixed, divisible_by };
  Kind kind = Kind::divisible_by;
  int value = 1;

  bool accepts(int size) const;
  std::string describe() const;
};

/// Permissible input size of an encoder/decoder pairing. The PSP decoder
/// constraint supersedes the encoder's.
SizeConstraint size_constraint(Encoder encoder, Decoder decoder);

/// Whether the pairing appears in the encoder/decoder combination table
/// (classical/classical is the built-in reference family).
bool is_known_combination(Encoder encoder, Decoder decoder);

struct ModelSpec {
  std::string id;
  Encoder encoder = Encoder::classical;
  Decoder decoder = Decoder::classical;
  int input_size = 256;
  std::map<std::string, std::string> params;
  bool enabled = true;

  SizeConstraint size_constraint() const {
    return elseg::size_constraint(encoder, decoder);
  }
};

/// Throws std::invalid_argument naming the violated constraint.
void validate_spec(const ModelSpec& spec);

ModelSpec model_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelSpec& spec);

/// Every trainable encoder/decoder candidate with its tuning parameters.
std::vector<ModelSpec> standard_model_zoo();

std::vector<ModelSpec> load_model_specs(const std::filesystem::path& path);
void write_model_specs(const std::filesystem::path& path,
                       const std::vector<ModelSpec>& specs);

/// Patch in, binary mask of identical dimensions out. Implementations are
/// stateless after construction and safe to call concurrently.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual const ModelSpec& spec() const = 0;
  virtual BinaryMask predict(const GrayImage& patch) const = 0;
};

struct ReferenceOptions {
  DefectKind kind = DefectKind::shunt;
  double threshold_sigma = 3.0;
  /// Cell pitch in pixels; estimated per patch when absent.
  std::optional<int> cell_pitch;
  /// Cells compared above and below a pixel for its same-phase statistics.
  int neighbour_cells = 4;
  /// Half-width, in cell pitches, of the along-row statistics window; 0
  /// disables the along-row test.
  int row_window_pitches = 20;
};

/// Classical robust-threshold segmenter. A pixel is a candidate when it
/// departs from the median of the same-phase pixels in adjacent cells by more
/// than threshold_sigma local MADs (darker for shunts, brighter for
/// droplets). Each candidate component keeps the pixels whose departure
/// reaches half of its peak (per row phase for droplets). That core is
/// dropped unless its median departure from the non-candidate pixels of the
/// same rows also exceeds threshold_sigma MADs. A 3x3 opening removes
/// speckle.
std::unique_ptr<Segmenter> reference_segmenter(const ReferenceOptions& options,
                                               ModelSpec spec = {});

/// Per-pixel threshold; flags pixels with intensity on the chosen side of a
/// fixed level. Useful as a translation-invariant probe.
std::unique_ptr<Segmenter> threshold_segmenter(double level, bool below,
                                               ModelSpec spec = {});

/// Hex SHA-256 of the patch: width and height as little-endian uint32, then
/// every intensity as a little-endian IEEE-754 binary64 in raster order.
std::string patch_key(const GrayImage& patch);

/// Looks up <prediction_dir>/<spec.id>/<patch_key>.png for every patch.
std::unique_ptr<Segmenter> external_segmenter(
    ModelSpec spec, std::filesystem::path prediction_dir);

/// Estimates the stripe period from the autocorrelation of row means.
int estimate_cell_pitch(const GrayImage& image);

/// Binary opening with a 3x3 square structuring element.
BinaryMask open3x3(const BinaryMask& mask);

}  // namespace elseg

#endif  // ELSEG_SEGMENTER_HPP_
