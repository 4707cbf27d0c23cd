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

#include "elseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "elseg/io.hpp"

namespace elseg {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool inside(const ModuleGeometry& g, Point2d p) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x < g.width() && p.y < g.height();
}

// A shunt centre must sit on a cell, not on a scribe line.
bool on_cell(const ModuleGeometry& g, Point2d p) {
  const int x = static_cast<int>(p.x);
  const int y = static_cast<int>(p.y);
  return !g.is_interconnect_row(y) && !g.is_isolation_column(x);
}

std::vector<int> sorted_positions(const ModuleGeometry& g, Orientation o) {
  std::vector<int> out;
  for (const auto& line : g.stitch_lines) {
    if (line.orientation == o) out.push_back(line.position);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void apply_shunt(const SynthSpec& spec, const ShuntSpec& s, GrayImage& image,
                 BinaryMask& mask) {
  const ModuleGeometry& g = spec.geometry;
  const int cx = static_cast<int>(s.center.x);
  const int cy = static_cast<int>(s.center.y);
  const int cell = g.cell_of_row(cy);
  const int sub = g.submodule_of_column(cx);
  const int y0 = cell * g.cell_pitch;
  const int y1 = cell == g.cell_count - 1 ? y0 + g.cell_pitch
                                          : y0 + g.cell_pitch - g.interconnect_width;
  const int x0 = sub * (g.submodule_width + g.isolation_line_width);
  const int x1 = x0 + g.submodule_width;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const double d = std::hypot(x - s.center.x, y - s.center.y);
      const double falloff = std::exp(-d / s.radius);
      image(y, x) *= 1.0 - s.severity * falloff;
      if (falloff > 0.5) mask(y, x) = true;
    }
  }
}

void apply_droplet(const DropletSpec& s, GrayImage& image, BinaryMask& mask) {
  const double reach = s.radius + 6.0 * s.ring_width;
  const int x0 = std::max(0, static_cast<int>(std::floor(s.center.x - reach)));
  const int y0 = std::max(0, static_cast<int>(std::floor(s.center.y - reach)));
  const int x1 = std::min(static_cast<int>(image.cols()),
                          static_cast<int>(std::ceil(s.center.x + reach)) + 1);
  const int y1 = std::min(static_cast<int>(image.rows()),
                          static_cast<int>(std::ceil(s.center.y + reach)) + 1);
  const double two_w2 = 2.0 * s.ring_width * s.ring_width;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const double d = std::hypot(x - s.center.x, y - s.center.y) - s.radius;
      const double profile = std::exp(-d * d / two_w2);
      image(y, x) *= 1.0 + (s.brightness_gain - 1.0) * profile;
      if (profile > 0.5) mask(y, x) = true;
    }
  }
}

Point2d point_from_json(const nlohmann::json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>()};
}

}  // namespace

int patch_index(const ModuleGeometry& g, int x, int y) {
  int row = 0;
  int col = 0;
  for (const auto& line : g.stitch_lines) {
    if (line.orientation == Orientation::horizontal) {
      row += y >= line.position;
    } else {
      col += x >= line.position;
    }
  }
  return row * (g.vertical_stitch_count() + 1) + col;
}

void SynthSpec::validate() const {
  geometry.validate();
  const auto patches = static_cast<std::size_t>(
      (geometry.horizontal_stitch_count() + 1) *
      (geometry.vertical_stitch_count() + 1));
  if (patch_offsets.size() != patches) {
    throw std::invalid_argument("expected " + std::to_string(patches) +
                                " patch offsets, got " +
                                std::to_string(patch_offsets.size()));
  }
  for (double v : patch_offsets) {
    if (!(v > 0.0)) throw std::invalid_argument("patch offsets must be > 0");
  }
  if (!(base_intensity > 0.0)) {
    throw std::invalid_argument("base_intensity must be > 0");
  }
  if (!(line_factor > 0.0) || line_factor > 1.0) {
    throw std::invalid_argument("line_factor must lie in (0, 1]");
  }
  if (!(noise_sigma >= 0.0)) {
    throw std::invalid_argument("noise_sigma must be >= 0");
  }
  for (const auto& s : shunts) {
    if (!inside(geometry, s.center)) {
      throw std::invalid_argument("shunt centre outside the image");
    }
    if (!on_cell(geometry, s.center)) {
      throw std::invalid_argument("shunt centre lies on a scribe line");
    }
    if (!(s.radius > 0.0)) throw std::invalid_argument("shunt radius must be > 0");
    if (!(s.severity > 0.0) || s.severity > 1.0) {
      throw std::invalid_argument("shunt severity must lie in (0, 1]");
    }
  }
  for (const auto& d : droplets) {
    if (!inside(geometry, d.center)) {
      throw std::invalid_argument("droplet centre outside the image");
    }
    if (!(d.radius > 0.0) || !(d.ring_width > 0.0)) {
      throw std::invalid_argument("droplet radius and ring width must be > 0");
    }
    if (!(d.brightness_gain > 1.0)) {
      throw std::invalid_argument("droplet brightness_gain must be > 1");
    }
  }
}

SynthSpec SynthSpec::standard() {
  SynthSpec s;
  s.patch_offsets = {1.00, 0.93, 1.06, 0.97, 1.04, 0.95, 1.02, 0.91};
  return s;
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s = SynthSpec::standard();
  try {
    if (j.contains("geometry")) {
      const auto& gj = j["geometry"];
      ModuleGeometry& g = s.geometry;
      g.cell_count = gj.value("cell_count", g.cell_count);
      g.submodule_count = gj.value("submodule_count", g.submodule_count);
      g.cell_pitch = gj.value("cell_pitch", g.cell_pitch);
      g.interconnect_width = gj.value("interconnect_width", g.interconnect_width);
      g.isolation_line_width =
          gj.value("isolation_line_width", g.isolation_line_width);
      g.submodule_width = gj.value("submodule_width", g.submodule_width);
      if (gj.contains("stitch_lines")) {
        g.stitch_lines.clear();
        for (const auto& lj : gj["stitch_lines"]) {
          const auto o = lj.at("orientation").get<std::string>();
          if (o != "horizontal" && o != "vertical") {
            throw FormatError("unknown stitch line orientation '" + o + "'");
          }
          g.stitch_lines.push_back(
              {o == "horizontal" ? Orientation::horizontal
                                 : Orientation::vertical,
               lj.at("position").get<int>()});
        }
      } else {
        g.stitch_lines = ModuleGeometry::standard().stitch_lines;
        // Re-centre the default stitch lines on a resized module.
        const int w = g.width();
        const int h = g.height();
        g.stitch_lines = {{Orientation::horizontal, h / 2},
                          {Orientation::vertical, w / 4},
                          {Orientation::vertical, w / 2},
                          {Orientation::vertical, 3 * w / 4}};
      }
    }
    s.base_intensity = j.value("base_intensity", s.base_intensity);
    s.line_factor = j.value("line_factor", s.line_factor);
    if (j.contains("patch_offsets")) {
      s.patch_offsets = j["patch_offsets"].get<std::vector<double>>();
    }
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.seed = j.value("seed", s.seed);
    for (const auto& sj : j.value("shunts", nlohmann::json::array())) {
      s.shunts.push_back({point_from_json(sj.at("center")),
                          sj.value("severity", 0.6), sj.value("radius", 12.0)});
    }
    for (const auto& dj : j.value("droplets", nlohmann::json::array())) {
      s.droplets.push_back({point_from_json(dj.at("center")),
                            dj.value("brightness_gain", 1.5),
                            dj.value("radius", 12.0),
                            dj.value("ring_width", 2.5)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed synth spec: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const SynthSpec& s) {
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& l : s.geometry.stitch_lines) {
    lines.push_back({{"orientation", l.orientation == Orientation::horizontal
                                         ? "horizontal"
                                         : "vertical"},
                     {"position", l.position}});
  }
  const ModuleGeometry& g = s.geometry;
  nlohmann::json shunts = nlohmann::json::array();
  for (const auto& sh : s.shunts) {
    shunts.push_back({{"center", {{"x", sh.center.x}, {"y", sh.center.y}}},
                      {"severity", sh.severity},
                      {"radius", sh.radius}});
  }
  nlohmann::json droplets = nlohmann::json::array();
  for (const auto& d : s.droplets) {
    droplets.push_back({{"center", {{"x", d.center.x}, {"y", d.center.y}}},
                        {"brightness_gain", d.brightness_gain},
                        {"radius", d.radius},
                        {"ring_width", d.ring_width}});
  }
  return {{"geometry",
           {{"cell_count", g.cell_count},
            {"submodule_count", g.submodule_count},
            {"cell_pitch", g.cell_pitch},
            {"interconnect_width", g.interconnect_width},
            {"isolation_line_width", g.isolation_line_width},
            {"submodule_width", g.submodule_width},
            {"stitch_lines", lines}}},
          {"base_intensity", s.base_intensity},
          {"line_factor", s.line_factor},
          {"patch_offsets", s.patch_offsets},
          {"noise_sigma", s.noise_sigma},
          {"shunts", shunts},
          {"droplets", droplets},
          {"seed", s.seed}};
}

Rendered render(const SynthSpec& spec) {
  spec.validate();
  const ModuleGeometry& g = spec.geometry;
  const int w = g.width();
  const int h = g.height();

  const auto hs = sorted_positions(g, Orientation::horizontal);
  const auto vs = sorted_positions(g, Orientation::vertical);
  Eigen::ArrayXi row_band(h);
  Eigen::ArrayXd row_factor(h);
  for (int y = 0; y < h; ++y) {
    row_band(y) = static_cast<int>(std::upper_bound(hs.begin(), hs.end(), y) -
                                   hs.begin());
    row_factor(y) = g.is_interconnect_row(y) ? spec.line_factor : 1.0;
  }
  Eigen::ArrayXi col_band(w);
  Eigen::ArrayXd col_factor(w);
  for (int x = 0; x < w; ++x) {
    col_band(x) = static_cast<int>(std::upper_bound(vs.begin(), vs.end(), x) -
                                   vs.begin());
    col_factor(x) = g.is_isolation_column(x) ? spec.line_factor : 1.0;
  }

  Rendered out;
  out.image.resize(h, w);
  const int bands = static_cast<int>(vs.size()) + 1;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double line = std::min(row_factor(y), col_factor(x));
      out.image(y, x) = spec.base_intensity *
                        spec.patch_offsets[row_band(y) * bands + col_band(x)] *
                        line;
    }
  }

  out.shunt_mask = BinaryMask::Constant(h, w, false);
  out.droplet_mask = BinaryMask::Constant(h, w, false);
  for (const auto& s : spec.shunts) apply_shunt(spec, s, out.image, out.shunt_mask);
  for (const auto& d : spec.droplets) apply_droplet(d, out.image, out.droplet_mask);

  if (spec.noise_sigma > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (Eigen::Index i = 0; i < out.image.size(); ++i) {
      out.image.data()[i] = std::max(0.0, out.image.data()[i] + noise(rng));
    }
  }
  return out;
}

Point2d sample_position(const ModuleGeometry& g,
                        const std::optional<DensityPrior>& prior,
                        std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double w = g.width();
  const double h = g.height();
  if (!prior) return {unit(rng) * w, unit(rng) * h};

  const DensityPrior& p = *prior;
  if (p.size() == 0 || (p < 0.0).any() || !(p.sum() > 0.0)) {
    throw std::invalid_argument("density prior needs non-negative weights with a positive sum");
  }
  std::discrete_distribution<Eigen::Index> cell(p.data(), p.data() + p.size());
  const Eigen::Index k = cell(rng);
  const double cy = static_cast<double>(k / p.cols());
  const double cx = static_cast<double>(k % p.cols());
  return {(cx + unit(rng)) * w / static_cast<double>(p.cols()),
          (cy + unit(rng)) * h / static_cast<double>(p.rows())};
}

std::vector<CorpusItem> plan_corpus(const SynthSpec& tmpl,
                                    const CorpusOptions& options,
                                    const std::optional<DensityPrior>& prior) {
  if (options.count < 1) throw std::invalid_argument("corpus count must be >= 1");
  if (options.train_fraction < 0.0 || options.test_fraction < 0.0 ||
      options.train_fraction + options.test_fraction > 1.0) {
    throw std::invalid_argument("split fractions must be non-negative and sum to <= 1");
  }
  tmpl.validate();
  const ModuleGeometry& g = tmpl.geometry;

  std::vector<std::size_t> order(options.count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 split_rng(splitmix64(tmpl.seed ^ 0x5eedULL));
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto n_train = static_cast<std::size_t>(
      std::lround(options.train_fraction * options.count));
  const auto n_test = static_cast<std::size_t>(
      std::lround(options.test_fraction * options.count));
  std::vector<Split> splits(options.count, Split::final);
  for (std::size_t r = 0; r < order.size(); ++r) {
    splits[order[r]] = r < n_train            ? Split::train
                       : r < n_train + n_test ? Split::test
                                              : Split::final;
  }

  std::vector<CorpusItem> items;
  items.reserve(options.count);
  for (int i = 0; i < options.count; ++i) {
    CorpusItem item;
    char id[32];
    std::snprintf(id, sizeof(id), "module_%04d", i);
    item.id = id;
    item.split = splits[i];
    item.spec = tmpl;
    item.spec.seed = splitmix64(tmpl.seed + static_cast<std::uint64_t>(i));
    std::mt19937_64 rng(item.spec.seed ^ 0xd1ceULL);

    std::vector<Point2d> placed;
    const auto place = [&](bool needs_cell) {
      for (int attempt = 0; attempt < 1000; ++attempt) {
        const Point2d p = sample_position(g, prior, rng);
        if (!inside(g, p) || (needs_cell && !on_cell(g, p))) continue;
        const bool clear = std::all_of(placed.begin(), placed.end(), [&](Point2d q) {
          return std::hypot(p.x - q.x, p.y - q.y) >= options.min_separation;
        });
        if (!clear) continue;
        placed.push_back(p);
        return p;
      }
      throw std::runtime_error("could not place a defect; prior too narrow or module too crowded");
    };
    for (auto& s : item.spec.shunts) s.center = place(true);
    for (auto& d : item.spec.droplets) d.center = place(false);
    items.push_back(std::move(item));
  }
  return items;
}

DatasetManifest corpus_manifest(const std::vector<CorpusItem>& items) {
  DatasetManifest m;
  m.root = ".";
  for (const auto& item : items) {
    for (DefectKind kind : {DefectKind::shunt, DefectKind::droplet}) {
      ManifestEntry e;
      e.image = std::filesystem::path("images") / (item.id + ".png");
      e.mask = std::filesystem::path("masks") / std::string(to_string(kind)) /
               (item.id + ".png");
      e.kind = kind;
      e.split = item.split;
      m.entries.push_back(std::move(e));
    }
  }
  m.validate();
  return m;
}

Corpus render_corpus(const SynthSpec& tmpl, const CorpusOptions& options,
                     const std::optional<DensityPrior>& prior) {
  const auto items = plan_corpus(tmpl, options, prior);
  Corpus c;
  c.manifest = corpus_manifest(items);
  for (const auto& item : items) c.items.push_back(render(item.spec));
  return c;
}

void write_corpus_item(const CorpusItem& item,
                       const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  const Rendered r = render(item.spec);
  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "masks" / "shunt");
  fs::create_directories(out_dir / "masks" / "droplet");
  save_image(out_dir / "images" / (item.id + ".png"), r.image, 16);
  save_mask(out_dir / "masks" / "shunt" / (item.id + ".png"), r.shunt_mask);
  save_mask(out_dir / "masks" / "droplet" / (item.id + ".png"), r.droplet_mask);
}

}  // namespace elseg
