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

#include "elseg/segmenter.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "elseg/io.hpp"
#include "elseg/metrics.hpp"

namespace elseg {

std::string_view to_string(Encoder e) {
  switch (e) {
    case Encoder::mobilenet:
      return "mobilenet";
    case Encoder::resnet:
      return "resnet";
    case Encoder::vgg:
      return "vgg";
    case Encoder::unet:
      return "unet";
    case Encoder::classical:
      return "classical";
  }
  return "classical";
}

std::string_view to_string(Decoder d) {
  switch (d) {
    case Decoder::unet:
      return "unet";
    case Decoder::fcn:
      return "fcn";
    case Decoder::psp:
      return "psp";
    case Decoder::segnet:
      return "segnet";
    case Decoder::classical:
      return "classical";
  }
  return "classical";
}

Encoder parse_encoder(std::string_view text) {
  for (Encoder e : {Encoder::mobilenet, Encoder::resnet, Encoder::vgg,
                    Encoder::unet, Encoder::classical}) {
    if (to_string(e) == text) return e;
  }
  throw FormatError("unknown encoder '" + std::string(text) + "'");
}

Decoder parse_decoder(std::string_view text) {
  for (Decoder d : {Decoder::unet, Decoder::fcn, Decoder::psp, Decoder::segnet,
                    Decoder::classical}) {
    if (to_string(d) == text) return d;
  }
  throw FormatError("unknown decoder '" + std::string(text) + "'");
}

bool SizeConstraint::accepts(int size) const {
  if (size < 1) return false;
  return kind == Kind::fixed ? size == value : size % value == 0;
}

std::string SizeConstraint::describe() const {
  return kind == Kind::fixed ? "fixed input size " + std::to_string(value)
                             : "input size divisible by " +
                                   std::to_string(value);
}

SizeConstraint size_constraint(Encoder encoder, Decoder decoder) {
  using K = SizeConstraint::Kind;
  if (decoder == Decoder::psp) return {K::divisible_by, 192};
  switch (encoder) {
    case Encoder::mobilenet:
      return {K::fixed, 224};
    case Encoder::resnet:
    case Encoder::vgg:
    case Encoder::unet:
      return {K::divisible_by, 32};
    case Encoder::classical:
      return {K::divisible_by, 1};
  }
  return {K::divisible_by, 1};
}

bool is_known_combination(Encoder encoder, Decoder decoder) {
  if (encoder == Encoder::classical || decoder == Decoder::classical) {
    return encoder == Encoder::classical && decoder == Decoder::classical;
  }
  switch (decoder) {
    case Decoder::psp:
      return encoder != Encoder::unet;
    case Decoder::segnet:
    case Decoder::unet:
    case Decoder::fcn:
      return true;
    case Decoder::classical:
      return false;
  }
  return false;
}

void validate_spec(const ModelSpec& spec) {
  if (!is_known_combination(spec.encoder, spec.decoder)) {
    throw std::invalid_argument(
        "model '" + spec.id + "': " + std::string(to_string(spec.encoder)) +
        " encoder cannot be paired with " +
        std::string(to_string(spec.decoder)) + " decoder");
  }
  const SizeConstraint c = spec.size_constraint();
  if (!c.accepts(spec.input_size)) {
    throw std::invalid_argument("model '" + spec.id + "': input size " +
                                std::to_string(spec.input_size) +
                                " violates constraint (" + c.describe() + ")");
  }
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  try {
    s.id = j.at("id").get<std::string>();
    s.encoder = parse_encoder(j.at("encoder").get<std::string>());
    s.decoder = parse_decoder(j.at("decoder").get<std::string>());
    s.input_size = j.at("input_size").get<int>();
    s.enabled = j.value("enabled", true);
    if (j.contains("params")) {
      for (const auto& [k, v] : j["params"].items()) {
        s.params[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model spec: ") + e.what());
  }
  return s;
}

nlohmann::json to_json(const ModelSpec& spec) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : spec.params) params[k] = v;
  const SizeConstraint c = spec.size_constraint();
  return {{"id", spec.id},
          {"encoder", std::string(to_string(spec.encoder))},
          {"decoder", std::string(to_string(spec.decoder))},
          {"input_size", spec.input_size},
          {"size_constraint",
           {{"kind", c.kind == SizeConstraint::Kind::fixed ? "fixed"
                                                           : "divisible_by"},
            {"value", c.value}}},
          {"params", params},
          {"enabled", spec.enabled}};
}

std::vector<ModelSpec> standard_model_zoo() {
  std::vector<ModelSpec> zoo;
  const auto add = [&zoo](Encoder e, Decoder d, int size, std::string suffix,
                          std::map<std::string, std::string> params) {
    ModelSpec s;
    s.encoder = e;
    s.decoder = d;
    s.input_size = size;
    s.params = std::move(params);
    std::string enc(to_string(e));
    if (e != Encoder::mobilenet && d != Decoder::psp) {
      enc += std::to_string(size);
    }
    s.id = enc + "+" + std::string(to_string(d)) + suffix;
    zoo.push_back(std::move(s));
  };
  // Encoders whose input size is a tuning parameter.
  const std::array sized = {Encoder::resnet, Encoder::vgg, Encoder::unet};
  const std::array sizes = {256, 512};

  for (Encoder e : {Encoder::mobilenet, Encoder::resnet, Encoder::vgg}) {
    add(e, Decoder::psp, 192, "", {});
  }

  add(Encoder::mobilenet, Decoder::unet, 224, "", {});
  for (Encoder e : sized) {
    for (int size : sizes) add(e, Decoder::unet, size, "", {});
  }

  for (int ups : {3, 4}) {
    const std::string u = std::to_string(ups);
    add(Encoder::mobilenet, Decoder::segnet, 224, u, {{"upsampling", u}});
    for (Encoder e : sized) {
      for (int size : sizes) {
        add(e, Decoder::segnet, size, u, {{"upsampling", u}});
      }
    }
  }

  add(Encoder::mobilenet, Decoder::fcn, 224, "8", {{"features", "8"}});
  for (Encoder e : sized) {
    for (int size : sizes) add(e, Decoder::fcn, size, "8", {{"features", "8"}});
  }
  // 32-feature FCN heads only fit in memory at the smaller input size.
  for (Encoder e : sized) add(e, Decoder::fcn, 256, "32", {{"features", "32"}});
  return zoo;
}

std::vector<ModelSpec> load_model_specs(const std::filesystem::path& path) {
  const nlohmann::json doc = read_json(path);
  const nlohmann::json& list = doc.is_object() ? doc.at("models") : doc;
  std::vector<ModelSpec> specs;
  for (const auto& j : list) {
    ModelSpec s = model_spec_from_json(j);
    validate_spec(s);
    specs.push_back(std::move(s));
  }
  return specs;
}

void write_model_specs(const std::filesystem::path& path,
                       const std::vector<ModelSpec>& specs) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& s : specs) list.push_back(to_json(s));
  write_json(path, {{"models", list}});
}

// ---------------------------------------------------------------------------

int estimate_cell_pitch(const GrayImage& image) {
  const Eigen::Index n = image.rows();
  if (n < 4) return 1;
  Eigen::ArrayXd means = image.rowwise().mean();
  means -= means.mean();
  const Eigen::Index max_lag = n / 2;
  Eigen::ArrayXd r = Eigen::ArrayXd::Zero(max_lag + 1);
  for (Eigen::Index lag = 1; lag <= max_lag; ++lag) {
    r(lag) = (means.head(n - lag) * means.tail(n - lag)).sum() /
             static_cast<double>(n - lag);
  }
  const double peak = r.tail(max_lag - 1).maxCoeff();
  if (!(peak > 0.0)) return 1;
  // First local maximum close to the global one; avoids locking on to a
  // harmonic of the stripe period.
  for (Eigen::Index lag = 2; lag <= max_lag; ++lag) {
    const bool local_max =
        r(lag) >= r(lag - 1) && (lag == max_lag || r(lag) >= r(lag + 1));
    if (local_max && r(lag) >= 0.8 * peak) return static_cast<int>(lag);
  }
  return 1;
}

BinaryMask open3x3(const BinaryMask& mask) {
  const Eigen::Index rows = mask.rows();
  const Eigen::Index cols = mask.cols();
  // Out-of-bounds pixels count as set for erosion, clear for dilation.
  BinaryMask eroded(rows, cols);
  for (Eigen::Index y = 0; y < rows; ++y) {
    for (Eigen::Index x = 0; x < cols; ++x) {
      bool all = true;
      for (Eigen::Index dy = -1; dy <= 1 && all; ++dy) {
        for (Eigen::Index dx = -1; dx <= 1 && all; ++dx) {
          const Eigen::Index yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= rows || xx < 0 || xx >= cols) continue;
          all = mask(yy, xx);
        }
      }
      eroded(y, x) = all;
    }
  }
  BinaryMask out(rows, cols);
  for (Eigen::Index y = 0; y < rows; ++y) {
    for (Eigen::Index x = 0; x < cols; ++x) {
      bool any = false;
      for (Eigen::Index dy = -1; dy <= 1 && !any; ++dy) {
        for (Eigen::Index dx = -1; dx <= 1 && !any; ++dx) {
          const Eigen::Index yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= rows || xx < 0 || xx >= cols) continue;
          any = eroded(yy, xx);
        }
      }
      out(y, x) = any;
    }
  }
  return out;
}

namespace {

struct RobustStats {
  double median = 0.0;
  double mad = 0.0;
};

// Lower median and lower-median absolute deviation; reorders values.
RobustStats robust_stats(std::vector<double>& values) {
  const auto mid =
      values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double median = *mid;
  for (double& v : values) v = std::abs(v - median);
  std::nth_element(values.begin(), mid, values.end());
  return {median, *mid};
}

// Same result as robust_stats for small samples: insertion sort, then the
// deviations below and above the median are merged in increasing order.
RobustStats small_robust_stats(double* v, int n) {
  for (int i = 1; i < n; ++i) {
    const double key = v[i];
    int j = i - 1;
    for (; j >= 0 && v[j] > key; --j) v[j + 1] = v[j];
    v[j + 1] = key;
  }
  const int m = (n - 1) / 2;
  const double median = v[m];
  double mad = 0.0;
  int lo = m - 1, hi = m + 1;
  for (int taken = 0; taken < m; ++taken) {
    const double below = lo >= 0 ? median - v[lo] : HUGE_VAL;
    const double above = hi < n ? v[hi] - median : HUGE_VAL;
    if (below <= above) {
      mad = below;
      --lo;
    } else {
      mad = above;
      ++hi;
    }
  }
  return {median, mad};
}

class ReferenceSegmenter final : public Segmenter {
 public:
  ReferenceSegmenter(ReferenceOptions options, ModelSpec spec)
      : options_(options), spec_(std::move(spec)) {}

  const ModelSpec& spec() const override { return spec_; }

  BinaryMask predict(const GrayImage& patch) const override {
    const Eigen::Index rows = patch.rows();
    const Eigen::Index cols = patch.cols();
    const int pitch = options_.cell_pitch.value_or(estimate_cell_pitch(patch));
    const double sign = options_.kind == DefectKind::shunt ? 1.0 : -1.0;
    const double k = options_.threshold_sigma;

    // Departure from the same-phase pixels of neighbouring cells.
    GrayImage departure(rows, cols);
    BinaryMask candidate(rows, cols);
    std::vector<double> samples;
    const int span = options_.neighbour_cells;
    std::vector<double> column(2 * static_cast<std::size_t>(span) + 1);
    for (Eigen::Index y = 0; y < rows; ++y) {
      for (Eigen::Index x = 0; x < cols; ++x) {
        int n = 0;
        for (int j = -span; j <= span; ++j) {
          const Eigen::Index yy = y + static_cast<Eigen::Index>(j) * pitch;
          if (yy >= 0 && yy < rows) column[n++] = patch(yy, x);
        }
        const RobustStats s = small_robust_stats(column.data(), n);
        const double d = sign * (s.median - patch(y, x));
        departure(y, x) = d;
        candidate(y, x) = d > k * s.mad;
      }
    }

    // Keep the half-peak core of every candidate component. Droplets span
    // several cells, so their peak is taken per row phase: a dark line only
    // competes with the same line of its neighbouring cells.
    const ComponentSet comps = label_components(candidate);
    const bool phased = options_.kind == DefectKind::droplet;
    const int phases = phased ? pitch : 1;
    std::vector<double> peak(static_cast<std::size_t>(comps.count + 1) * phases, 0.0);
    std::vector<Eigen::Index> peak_at(comps.count + 1, 0);
    std::vector<double> top(comps.count + 1, 0.0);
    auto slot = [&](int label, Eigen::Index y) {
      return static_cast<std::size_t>(label) * phases +
             (phased ? static_cast<std::size_t>(y % pitch) : 0);
    };
    for (Eigen::Index i = 0; i < candidate.size(); ++i) {
      const auto label = comps.labels.data()[i];
      if (!label) continue;
      const double d = departure.data()[i];
      double& p = peak[slot(label, i / cols)];
      p = std::max(p, d);
      if (d > top[label]) {
        top[label] = d;
        peak_at[label] = i;
      }
    }
    // An attenuation that peaks on the patch frame is centred outside the
    // patch; the neighbouring window sees it whole.
    std::vector<bool> outside(comps.count + 1, false);
    if (options_.kind == DefectKind::shunt) {
      constexpr Eigen::Index kFrame = 2;
      for (int c = 1; c <= comps.count; ++c) {
        const Eigen::Index y = peak_at[c] / cols, x = peak_at[c] % cols;
        outside[c] = y < kFrame || x < kFrame || y >= rows - kFrame ||
                     x >= cols - kFrame;
      }
    }
    BinaryMask core(rows, cols);
    for (Eigen::Index i = 0; i < candidate.size(); ++i) {
      const auto label = comps.labels.data()[i];
      core.data()[i] = label && !outside[label] &&
                       2.0 * departure.data()[i] >= peak[slot(label, i / cols)];
    }

    // A core survives when it also stands out from the non-candidate pixels
    // of its rows, scored per block of columns.
    constexpr Eigen::Index kBlock = 8;
    constexpr std::size_t kMinRowSamples = 8;
    const Eigen::Index half =
        static_cast<Eigen::Index>(options_.row_window_pitches) * pitch;
    if (half > 0) {
      std::vector<std::vector<double>> scores(comps.count + 1);
      for (Eigen::Index y = 0; y < rows; ++y) {
        for (Eigen::Index x0 = 0; x0 < cols; x0 += kBlock) {
          const Eigen::Index x1 = std::min(cols, x0 + kBlock);
          if (!core.row(y).segment(x0, x1 - x0).any()) continue;
          const Eigen::Index centre = (x0 + x1) / 2;
          const Eigen::Index lo = std::max<Eigen::Index>(0, centre - half);
          const Eigen::Index hi = std::min(cols - 1, centre + half);
          samples.clear();
          for (Eigen::Index x = lo; x <= hi; ++x) {
            if (!candidate(y, x)) samples.push_back(patch(y, x));
          }
          const bool usable = samples.size() >= kMinRowSamples;
          const RobustStats s = usable ? robust_stats(samples) : RobustStats{};
          for (Eigen::Index x = x0; x < x1; ++x) {
            if (!core(y, x)) continue;
            const double d = sign * (s.median - patch(y, x));
            const double score =
                !usable ? 0.0
                : s.mad > 0.0 ? d / s.mad
                : d > 0.0 ? std::numeric_limits<double>::infinity()
                          : 0.0;
            scores[comps.labels(y, x)].push_back(score);
          }
        }
      }
      std::vector<bool> keep(comps.count + 1, false);
      for (int c = 1; c <= comps.count; ++c) {
        if (scores[c].empty()) continue;
        keep[c] = robust_stats(scores[c]).median > k;
      }
      for (Eigen::Index i = 0; i < core.size(); ++i) {
        if (core.data()[i]) core.data()[i] = keep[comps.labels.data()[i]];
      }
    }
    return open3x3(core);
  }

 private:
  ReferenceOptions options_;
  ModelSpec spec_;
};

class ThresholdSegmenter final : public Segmenter {
 public:
  ThresholdSegmenter(double level, bool below, ModelSpec spec)
      : level_(level), below_(below), spec_(std::move(spec)) {}

  const ModelSpec& spec() const override { return spec_; }

  BinaryMask predict(const GrayImage& patch) const override {
    return below_ ? BinaryMask(patch < level_) : BinaryMask(patch > level_);
  }

 private:
  double level_;
  bool below_;
  ModelSpec spec_;
};

class ExternalSegmenter final : public Segmenter {
 public:
  ExternalSegmenter(ModelSpec spec, std::filesystem::path dir)
      : spec_(std::move(spec)), dir_(std::move(dir)) {}

  const ModelSpec& spec() const override { return spec_; }

  BinaryMask predict(const GrayImage& patch) const override {
    const auto path = dir_ / spec_.id / (patch_key(patch) + ".png");
    if (!std::filesystem::exists(path)) {
      throw IoError("missing prediction '" + path.string() + "'");
    }
    BinaryMask mask = load_mask(path);
    if (mask.rows() != patch.rows() || mask.cols() != patch.cols()) {
      throw std::invalid_argument(
          "prediction '" + path.string() + "' is " +
          std::to_string(mask.cols()) + "x" + std::to_string(mask.rows()) +
          ", patch is " + std::to_string(patch.cols()) + "x" +
          std::to_string(patch.rows()));
    }
    return mask;
  }

 private:
  ModelSpec spec_;
  std::filesystem::path dir_;
};

ModelSpec default_spec(ModelSpec spec, const std::string& id) {
  if (spec.id.empty()) spec.id = id;
  return spec;
}

void put_le(std::vector<unsigned char>& out, const void* value,
            std::size_t n) {
  unsigned char bytes[8];
  std::memcpy(bytes, value, n);
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + n);
  }
  out.insert(out.end(), bytes, bytes + n);
}

}  // namespace

std::unique_ptr<Segmenter> reference_segmenter(const ReferenceOptions& options,
                                               ModelSpec spec) {
  if (!(options.threshold_sigma > 0.0)) {
    throw std::invalid_argument("threshold_sigma must be positive");
  }
  if (options.cell_pitch && *options.cell_pitch < 1) {
    throw std::invalid_argument("cell_pitch must be >= 1");
  }
  return std::make_unique<ReferenceSegmenter>(
      options, default_spec(std::move(spec),
                            "reference-" + std::string(to_string(options.kind))));
}

std::unique_ptr<Segmenter> threshold_segmenter(double level, bool below,
                                               ModelSpec spec) {
  return std::make_unique<ThresholdSegmenter>(
      level, below, default_spec(std::move(spec), "threshold"));
}

std::unique_ptr<Segmenter> external_segmenter(
    ModelSpec spec, std::filesystem::path prediction_dir) {
  validate_spec(spec);
  return std::make_unique<ExternalSegmenter>(std::move(spec),
                                             std::move(prediction_dir));
}

std::string patch_key(const GrayImage& patch) {
  std::vector<unsigned char> bytes;
  bytes.reserve(8 + 8 * static_cast<std::size_t>(patch.size()));
  const auto w = static_cast<std::uint32_t>(patch.cols());
  const auto h = static_cast<std::uint32_t>(patch.rows());
  put_le(bytes, &w, 4);
  put_le(bytes, &h, 4);
  for (Eigen::Index i = 0; i < patch.size(); ++i) {
    put_le(bytes, patch.data() + i, 8);
  }
  return sha256_hex(std::string_view(
      reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace elseg
