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

#include "elseg/io.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace elseg {
namespace {

namespace fs = std::filesystem;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  return f;
}

struct RawPng {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 0;
  int color_type = 0;
  std::vector<unsigned char> bytes;
  std::size_t row_bytes = 0;
};

// No non-trivially-destructible locals here: libpng errors longjmp out.
bool decode(std::FILE* file, RawPng* out, const char** message) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  std::vector<png_bytep>* rows = new std::vector<png_bytep>();
  if (setjmp(png_jmpbuf(png))) {
    *message = "corrupt PNG stream";
    delete rows;
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, file);
  png_read_info(png, info);
  out->width = png_get_image_width(png, info);
  out->height = png_get_image_height(png, info);
  out->bit_depth = png_get_bit_depth(png, info);
  out->color_type = png_get_color_type(png, info);
  if (out->color_type != PNG_COLOR_TYPE_GRAY) {
    *message = "multi-channel";
    delete rows;
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  if (out->bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    out->bit_depth = 8;
  }
  if (out->bit_depth == 16) png_set_swap(png);
  png_read_update_info(png, info);
  out->row_bytes = png_get_rowbytes(png, info);
  out->bytes.resize(out->row_bytes * out->height);
  rows->resize(out->height);
  for (png_uint_32 y = 0; y < out->height; ++y) {
    (*rows)[y] = out->bytes.data() + y * out->row_bytes;
  }
  png_read_image(png, rows->data());
  png_read_end(png, nullptr);
  delete rows;
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool encode(std::FILE* file, const unsigned char* data, png_uint_32 width,
            png_uint_32 height, int bit_depth) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, file);
  png_set_compression_level(png, 3);
  png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  const std::size_t stride = width * static_cast<std::size_t>(bit_depth / 8);
  for (png_uint_32 y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(data + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

void write_raw(const fs::path& path, const std::vector<unsigned char>& data,
               int width, int height, int bit_depth) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  FilePtr f = open_file(path, "wb");
  if (!encode(f.get(), data.data(), static_cast<png_uint_32>(width),
              static_cast<png_uint_32>(height), bit_depth)) {
    throw IoError("failed to encode PNG '" + path.string() + "'");
  }
}

}  // namespace

ImageFile read_png(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("no such file '" + path.string() + "'");
  FilePtr f = open_file(path, "rb");
  unsigned char signature[8] = {};
  if (std::fread(signature, 1, 8, f.get()) != 8 ||
      png_sig_cmp(signature, 0, 8) != 0) {
    throw IoError("'" + path.string() + "' is not a PNG file");
  }
  std::rewind(f.get());
  RawPng raw;
  const char* message = "cannot allocate decoder";
  if (!decode(f.get(), &raw, &message)) {
    if (std::string_view(message) == "multi-channel") {
      throw std::invalid_argument("'" + path.string() +
                                  "' is multi-channel; expected grayscale");
    }
    throw IoError("'" + path.string() + "': " + message);
  }
  if (raw.width == 0 || raw.height == 0) {
    throw std::invalid_argument("'" + path.string() + "' has a zero dimension");
  }
  ImageFile out;
  out.bit_depth = raw.bit_depth;
  out.pixels.resize(raw.height, raw.width);
  for (png_uint_32 y = 0; y < raw.height; ++y) {
    const unsigned char* row = raw.bytes.data() + y * raw.row_bytes;
    for (png_uint_32 x = 0; x < raw.width; ++x) {
      if (raw.bit_depth == 16) {
        std::uint16_t v;
        std::memcpy(&v, row + 2 * x, 2);
        out.pixels(y, x) = v;
      } else {
        out.pixels(y, x) = row[x];
      }
    }
  }
  return out;
}

GrayImage load_image(const fs::path& path) { return read_png(path).pixels; }

BinaryMask load_mask(const fs::path& path) {
  return read_png(path).pixels > 0.0;
}

void save_image(const fs::path& path, const GrayImage& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw std::invalid_argument("bit depth must be 8 or 16");
  }
  validate_image(image);
  const double top = bit_depth == 16 ? 65535.0 : 255.0;
  const int bytes_per_sample = bit_depth / 8;
  std::vector<unsigned char> data(image.size() * bytes_per_sample);
  for (Eigen::Index i = 0; i < image.size(); ++i) {
    const double v = std::clamp(std::round(image.data()[i]), 0.0, top);
    if (bit_depth == 16) {
      const auto s = static_cast<std::uint16_t>(v);
      std::memcpy(data.data() + 2 * i, &s, 2);
    } else {
      data[i] = static_cast<unsigned char>(v);
    }
  }
  write_raw(path, data, static_cast<int>(image.cols()),
            static_cast<int>(image.rows()), bit_depth);
}

void save_mask(const fs::path& path, const BinaryMask& mask) {
  if (mask.size() == 0) throw std::invalid_argument("mask is empty");
  std::vector<unsigned char> data(mask.size());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    data[i] = mask.data()[i] ? 255 : 0;
  }
  write_raw(path, data, static_cast<int>(mask.cols()),
            static_cast<int>(mask.rows()), 8);
}

DatasetManifest manifest_from_json(const nlohmann::json& doc,
                                   const fs::path& base_dir) {
  if (!doc.is_object() || !doc.contains("entries") ||
      !doc["entries"].is_array()) {
    throw FormatError("manifest must be an object with an 'entries' array");
  }
  DatasetManifest manifest;
  const fs::path root = doc.value("root", std::string("."));
  manifest.root = root.is_absolute() ? root : base_dir / root;
  for (const auto& item : doc["entries"]) {
    if (!item.is_object() || !item.contains("image") ||
        !item["image"].is_string()) {
      throw FormatError("manifest entry without an 'image' string");
    }
    ManifestEntry e;
    e.image = item["image"].get<std::string>();
    if (item.contains("mask") && !item["mask"].is_null()) {
      if (!item["mask"].is_string()) {
        throw FormatError("manifest 'mask' must be a string or null");
      }
      e.mask = item["mask"].get<std::string>();
    }
    e.kind = parse_defect_kind(item.value("kind", std::string()));
    e.split = parse_split(item.value("split", std::string()));
    manifest.entries.push_back(std::move(e));
  }
  manifest.validate();
  return manifest;
}

nlohmann::json manifest_to_json(const DatasetManifest& manifest) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back({{"image", e.image.generic_string()},
                       {"mask", e.mask ? nlohmann::json(e.mask->generic_string())
                                       : nlohmann::json(nullptr)},
                       {"kind", std::string(to_string(e.kind))},
                       {"split", std::string(to_string(e.split))}});
  }
  return {{"root", manifest.root.generic_string()}, {"entries", entries}};
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xf]);
  }
  return hex;
}

DatasetManifest parse_manifest(const fs::path& path) {
  return manifest_from_json(read_json(path), path.parent_path());
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  write_json(path, manifest_to_json(manifest));
}

}  // namespace elseg
