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

#ifndef ELSEG_IO_HPP_
#define ELSEG_IO_HPP_

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "elseg/core.hpp"

namespace elseg {

struct ImageFile {
  GrayImage pixels;
  int bit_depth = 8;
};

/// Decodes a single-channel 8- or 16-bit PNG (1/2/4-bit gray is widened to
/// 8). Throws IoError for missing/unreadable files and std::invalid_argument
/// for multi-channel or empty rasters.
ImageFile read_png(const std::filesystem::path& path);

GrayImage load_image(const std::filesystem::path& path);

/// A pixel is a defect iff its source intensity is nonzero.
BinaryMask load_mask(const std::filesystem::path& path);

/// Rounds and clamps to [0, 2^bit_depth - 1]. bit_depth must be 8 or 16.
void save_image(const std::filesystem::path& path, const GrayImage& image,
                int bit_depth = 16);

/// Writes an 8-bit PNG with 0 for background and 255 for defect.
void save_mask(const std::filesystem::path& path, const BinaryMask& mask);

DatasetManifest manifest_from_json(const nlohmann::json& doc,
                                   const std::filesystem::path& base_dir);
nlohmann::json manifest_to_json(const DatasetManifest& manifest);

/// Relative roots resolve against the manifest's own directory.
DatasetManifest parse_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path,
                    const DatasetManifest& manifest);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

}  // namespace elseg

#endif  // ELSEG_IO_HPP_
