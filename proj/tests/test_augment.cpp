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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "elseg/app.hpp"
#include "elseg/augment.hpp"
#include "elseg/synth.hpp"
#include "elseg/tiling.hpp"

namespace elseg {
namespace {

GrayImage random_image(int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 4000);
  GrayImage img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = u(rng);
  return img;
}

TEST(Contrast, ZeroAlphaIsIdentity) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const GrayImage img = random_image(17, 23, rng);
    EXPECT_LE((contrast(img, 0.0) - img).abs().maxCoeff(), 1e-9);
  }
}

TEST(Contrast, WorkedValues) {
  GrayImage img(1, 3);
  img << 0.0, 50.0, 100.0;
  const GrayImage out = contrast(img, 0.4);
  EXPECT_NEAR(out(0, 1), 30.0, 1e-12);
  EXPECT_NEAR(out(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(out(0, 2), 60.0, 1e-12);
  img << 10.0, 20.0, 30.0;
  const GrayImage darker = contrast(img, -0.5);
  EXPECT_NEAR(darker(0, 0), 5.0, 1e-12);
  EXPECT_NEAR(darker(0, 2), 45.0, 1e-12);
}

TEST(Contrast, ConstantImageIsAnError) {
  EXPECT_THROW(contrast(GrayImage::Constant(4, 4, 7.0), 0.2), std::domain_error);
}

TEST(Mirror, ReversesTheChosenAxis) {
  GrayImage img(2, 2);
  img << 1, 2, 3, 4;
  GrayImage h(2, 2), v(2, 2);
  h << 2, 1, 4, 3;
  v << 3, 4, 1, 2;
  EXPECT_TRUE((mirror(img, MirrorAxis::horizontal) == h).all());
  EXPECT_TRUE((mirror(img, MirrorAxis::vertical) == v).all());
  std::mt19937_64 rng(5);
  const GrayImage r = random_image(9, 13, rng);
  for (auto axis : {MirrorAxis::horizontal, MirrorAxis::vertical}) {
    EXPECT_TRUE((mirror(mirror(r, axis), axis) == r).all());
  }
}

TEST(Rescale, RoundsTargetSize) {
  const auto [img, mask] =
      rescale(GrayImage::Constant(200, 100, 3.0), BinaryMask::Constant(200, 100, true), 0.7);
  EXPECT_EQ(size_of(img), (Size{70, 140}));
  EXPECT_EQ(size_of(mask), (Size{70, 140}));
  EXPECT_NEAR(img.maxCoeff(), 3.0, 1e-12);
  EXPECT_TRUE(mask.all());
  EXPECT_THROW(rescale(GrayImage::Constant(1, 1, 1.0), BinaryMask::Constant(1, 1, true), 0.3),
               std::invalid_argument);
  EXPECT_THROW(rescale(GrayImage::Constant(4, 4, 1.0), BinaryMask::Constant(4, 5, true), 1.0),
               std::invalid_argument);
}

TEST(AugmentConfig, DefaultGrids) {
  const AugmentConfig cfg;
  const auto scales = cfg.scales();
  ASSERT_EQ(scales.size(), 5u);
  EXPECT_DOUBLE_EQ(scales.front(), 0.7);
  EXPECT_DOUBLE_EQ(scales.back(), 1.3);
  const auto alphas = cfg.alphas();
  ASSERT_EQ(alphas.size(), 3u);
  EXPECT_DOUBLE_EQ(alphas[1], 0.0);
  EXPECT_EQ(cfg.mirrors().size(), 3u);
  const auto back = augment_config_from_json(to_json(cfg));
  EXPECT_EQ(to_json(back), to_json(cfg));
  EXPECT_THROW(augment_config_from_json({{"alpha_range", {-1.0, 0.2}}}),
               std::invalid_argument);
}

TEST(DefectWindows, FullMaskKeepsEveryWindow) {
  AugmentConfig cfg;
  const auto w = defect_windows(BinaryMask::Constant(300, 300, true), cfg);
  EXPECT_EQ(w.size(), 4u);
  EXPECT_TRUE(defect_windows(BinaryMask::Constant(300, 300, false), cfg).empty());
  EXPECT_TRUE(defect_windows(BinaryMask::Constant(100, 300, true), cfg).empty());
}

TEST(DefectWindows, ThresholdIsInclusive) {
  AugmentConfig cfg;
  cfg.window_size = 32;
  cfg.window_shift = 32;
  BinaryMask m = BinaryMask::Constant(32, 32, false);
  m.topRows(6).setConstant(true);
  m.block(6, 0, 1, 8).setConstant(true);  // 200 pixels
  EXPECT_EQ(defect_windows(m, cfg).size(), 1u);
  m(6, 7) = false;
  EXPECT_TRUE(defect_windows(m, cfg).empty());
}

TEST(DefectWindows, MatchesExhaustiveScan) {
  std::mt19937_64 rng(11);
  AugmentConfig cfg;
  cfg.window_size = 24;
  cfg.window_shift = 7;
  cfg.min_defect_pixels = 60;
  std::bernoulli_distribution coin(0.1);
  for (int trial = 0; trial < 50; ++trial) {
    BinaryMask m(60 + trial, 90 - trial);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = coin(rng);
    const auto kept = defect_windows(m, cfg);
    std::size_t k = 0;
    for (int y : window_offsets(static_cast<int>(m.rows()), 24, 7)) {
      for (int x : window_offsets(static_cast<int>(m.cols()), 24, 7)) {
        const auto n = popcount(m.block(y, x, 24, 24));
        if (n >= 60) {
          ASSERT_LT(k, kept.size());
          EXPECT_EQ(kept[k], (Point{x, y}));
          ++k;
        }
      }
    }
    EXPECT_EQ(k, kept.size());
  }
}

SourceSet small_sources() {
  std::vector<AugmentSource> sources;
  std::mt19937_64 rng(21);
  for (int i = 0; i < 3; ++i) {
    AugmentSource s;
    s.id = "src" + std::to_string(i);
    s.image = random_image(90 + 10 * i, 110, rng);
    s.mask = BinaryMask::Constant(s.image.rows(), s.image.cols(), false);
    s.mask.block(20 + 5 * i, 30, 25, 40).setConstant(true);
    sources.push_back(std::move(s));
  }
  return SourceSet::in_memory(std::move(sources));
}

AugmentConfig small_config() {
  AugmentConfig cfg;
  cfg.window_size = 48;
  cfg.window_shift = 10;
  cfg.min_defect_pixels = 300;
  cfg.shuffle_seed = 17;
  return cfg;
}

TEST(Pipeline, EveryPatchPassesTheFilter) {
  const auto patches = pipeline(small_sources(), small_config());
  ASSERT_FALSE(patches.empty());
  for (const auto& p : patches) {
    EXPECT_EQ(size_of(p.image), (Size{48, 48}));
    EXPECT_GE(popcount(p.mask), 300);
  }
}

TEST(Pipeline, ProvenanceReconstructsPatchesExactly) {
  const SourceSet sources = small_sources();
  const AugmentConfig cfg = small_config();
  const auto patches = pipeline(sources, cfg);
  const auto plan = plan_patches(sources, cfg);
  ASSERT_EQ(plan.size(), patches.size());
  for (std::size_t i = 0; i < patches.size(); i += 7) {
    const auto& p = patches[i];
    EXPECT_EQ(to_json(p.provenance), to_json(plan[i]));
    const PatchPair again =
        materialize(sources.load(p.provenance.source_index), p.provenance, 48);
    EXPECT_TRUE((again.image == p.image).all());
    EXPECT_TRUE((again.mask == p.mask).all());
  }
}

TEST(Pipeline, ShuffleIsASeededPermutation) {
  const SourceSet sources = small_sources();
  AugmentConfig cfg = small_config();
  const auto a = plan_patches(sources, cfg);
  EXPECT_EQ(plan_patches(sources, cfg).size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(to_json(plan_patches(sources, cfg)[i]), to_json(a[i]));
    if (i > 3) break;
  }
  cfg.shuffle_seed = 18;
  auto b = plan_patches(sources, cfg);
  auto key = [](const Provenance& p) { return to_json(p).dump(); };
  std::vector<std::string> ka, kb;
  for (const auto& p : a) ka.push_back(key(p));
  for (const auto& p : b) kb.push_back(key(p));
  EXPECT_NE(ka, kb);
  std::sort(ka.begin(), ka.end());
  std::sort(kb.begin(), kb.end());
  EXPECT_EQ(ka, kb);
  EXPECT_EQ(std::adjacent_find(ka.begin(), ka.end()), ka.end());
}

SourceSet rendered_sources(DefectKind kind, int count) {
  SynthSpec tmpl = app::E2EConfig::default_demo_template();
  CorpusOptions opts;
  opts.count = count;
  opts.train_fraction = 1.0;
  opts.test_fraction = 0.0;
  auto items = std::make_shared<const std::vector<CorpusItem>>(
      plan_corpus(tmpl, opts, std::nullopt));
  return {items->size(), [items, kind](std::size_t i) {
            Rendered r = render((*items)[i].spec);
            return AugmentSource{(*items)[i].id, std::move(r.image),
                                 kind == DefectKind::shunt ? r.shunt_mask
                                                           : r.droplet_mask};
          }};
}

TEST(PatchCount, DemoTemplateLandsNearDocumentedVolumes) {
  const AugmentConfig cfg;
  const auto shunts = plan_patches(rendered_sources(DefectKind::shunt, 106), cfg);
  EXPECT_GE(shunts.size(), 7500u);
  EXPECT_LE(shunts.size(), 22500u);
  const auto droplets = plan_patches(rendered_sources(DefectKind::droplet, 8), cfg);
  EXPECT_GE(droplets.size(), 2500u);
  EXPECT_LE(droplets.size(), 7500u);
}

}  // namespace
}  // namespace elseg
