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

#include <random>
#include <set>

#include "elseg/io.hpp"
#include "elseg/metrics.hpp"
#include "elseg/segmenter.hpp"
#include "elseg/synth.hpp"
#include "elseg/tiling.hpp"
#include "test_support.hpp"

namespace elseg {
namespace {

using testing::TempDir;

ModelSpec spec_of(Encoder e, Decoder d, int size) {
  ModelSpec s;
  s.id = "m";
  s.encoder = e;
  s.decoder = d;
  s.input_size = size;
  return s;
}

TEST(ValidateSpec, AcceptsDocumentedSizes) {
  EXPECT_NO_THROW(validate_spec(spec_of(Encoder::resnet, Decoder::unet, 256)));
  EXPECT_NO_THROW(validate_spec(spec_of(Encoder::mobilenet, Decoder::fcn, 224)));
  EXPECT_NO_THROW(validate_spec(spec_of(Encoder::vgg, Decoder::psp, 192)));
}

TEST(ValidateSpec, ErrorNamesTheViolatedConstraint) {
  try {
    validate_spec(spec_of(Encoder::resnet, Decoder::psp, 256));
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("divisible by 192"), std::string::npos);
  }
  try {
    validate_spec(spec_of(Encoder::mobilenet, Decoder::unet, 256));
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("fixed input size 224"), std::string::npos);
  }
  EXPECT_THROW(validate_spec(spec_of(Encoder::resnet, Decoder::fcn, 250)),
               std::invalid_argument);
}

TEST(ValidateSpec, RejectsUnlistedPairings) {
  EXPECT_THROW(validate_spec(spec_of(Encoder::unet, Decoder::psp, 192)),
               std::invalid_argument);
  EXPECT_THROW(validate_spec(spec_of(Encoder::classical, Decoder::unet, 256)),
               std::invalid_argument);
  EXPECT_NO_THROW(validate_spec(spec_of(Encoder::classical, Decoder::classical, 100)));
}

TEST(ModelZoo, ListsThirtyFourValidUniqueModels) {
  const auto zoo = standard_model_zoo();
  EXPECT_EQ(zoo.size(), 34u);
  std::set<std::string> ids;
  for (const auto& s : zoo) {
    EXPECT_NO_THROW(validate_spec(s)) << s.id;
    EXPECT_TRUE(is_known_combination(s.encoder, s.decoder)) << s.id;
    EXPECT_NE(s.encoder, Encoder::classical);
    ids.insert(s.id);
  }
  EXPECT_EQ(ids.size(), zoo.size());
  EXPECT_TRUE(ids.count("mobilenet+fcn8"));
  EXPECT_TRUE(ids.count("vgg256+unet"));
}

TEST(ModelZoo, RoundTripsThroughJson) {
  TempDir dir;
  auto zoo = standard_model_zoo();
  zoo[3].enabled = false;
  write_model_specs(dir / "models.json", zoo);
  const auto back = load_model_specs(dir / "models.json");
  ASSERT_EQ(back.size(), zoo.size());
  for (std::size_t i = 0; i < zoo.size(); ++i) {
    EXPECT_EQ(back[i].id, zoo[i].id);
    EXPECT_EQ(back[i].encoder, zoo[i].encoder);
    EXPECT_EQ(back[i].decoder, zoo[i].decoder);
    EXPECT_EQ(back[i].input_size, zoo[i].input_size);
    EXPECT_EQ(back[i].params, zoo[i].params);
    EXPECT_EQ(back[i].enabled, zoo[i].enabled);
  }
}

TEST(PatchKey, MatchesIndependentDigest) {
  GrayImage p(1, 2);
  p << 1.0, 2.5;
  EXPECT_EQ(patch_key(p),
            "c01466d69f3a1711b23d36dbbb83bb0de9d3d628450667590ee8755c272f0d8a");
  GrayImage q(2, 1);
  q << 1.0, 2.5;
  EXPECT_EQ(patch_key(q),
            "ddd70900f55a61b1ee91935770c7730be5c120f02b83826f5590a0e3ad03be73");
}

TEST(ExternalSegmenter, ReturnsStoredMaskVerbatim) {
  TempDir dir;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1000);
  GrayImage patch(16, 16);
  for (Eigen::Index i = 0; i < patch.size(); ++i) patch.data()[i] = std::round(u(rng));
  BinaryMask stored = BinaryMask::Constant(16, 16, false);
  stored.block(2, 3, 4, 5).setConstant(true);
  const ModelSpec spec = spec_of(Encoder::classical, Decoder::classical, 16);
  save_mask(dir.path() / "m" / (patch_key(patch) + ".png"), stored);
  const auto seg = external_segmenter(spec, dir.path());
  EXPECT_TRUE((seg->predict(patch) == stored).all());
  EXPECT_EQ(seg->spec().id, "m");

  GrayImage other = patch;
  other(0, 0) += 1;
  EXPECT_THROW(seg->predict(other), IoError);
}

TEST(ExternalSegmenter, RejectsDimensionMismatch) {
  TempDir dir;
  const GrayImage patch = GrayImage::Constant(256, 256, 5.0);
  save_mask(dir.path() / "m" / (patch_key(patch) + ".png"),
            BinaryMask::Constant(224, 224, false));
  const auto seg = external_segmenter(spec_of(Encoder::resnet, Decoder::unet, 256),
                                      dir.path());
  EXPECT_THROW(seg->predict(patch), std::invalid_argument);
}

SynthSpec one_shunt(double noise) {
  SynthSpec s = SynthSpec::standard();
  s.noise_sigma = noise;
  s.seed = 9;
  s.shunts = {ShuntSpec{{400.0, 1205.0}, 0.6, 12.0}};
  return s;
}

SynthSpec one_droplet(double noise) {
  SynthSpec s = SynthSpec::standard();
  s.noise_sigma = noise;
  s.seed = 10;
  s.droplets = {DropletSpec{{220.0, 610.0}, 1.6, 12.0, 2.5}};
  return s;
}

std::unique_ptr<Segmenter> reference(DefectKind kind, double k = 3.0) {
  ReferenceOptions o;
  o.kind = kind;
  o.threshold_sigma = k;
  ModelSpec spec;
  spec.id = "reference";
  spec.input_size = 256;
  return reference_segmenter(o, spec);
}

TEST(ReferenceSegmenter, ConstantPatchGivesEmptyMask) {
  for (DefectKind kind : {DefectKind::shunt, DefectKind::droplet}) {
    const BinaryMask m = reference(kind)->predict(GrayImage::Constant(64, 48, 700.0));
    EXPECT_EQ(size_of(m), (Size{48, 64}));
    EXPECT_EQ(popcount(m), 0);
  }
}

TEST(ReferenceSegmenter, FindsNoiseFreeShunt) {
  const Rendered r = render(one_shunt(0.0));
  const BinaryMask pred = segment_full(r.image, *reference(DefectKind::shunt));
  EXPECT_GE(*jaccard(pred, r.shunt_mask), 0.7);
}

TEST(ReferenceSegmenter, FindsNoisyShuntAndDroplet) {
  const Rendered s = render(one_shunt(10.0));
  const MetricSample ms =
      evaluate(segment_full(s.image, *reference(DefectKind::shunt)), s.shunt_mask);
  EXPECT_GE(*ms.jaccard, 0.7);
  EXPECT_EQ(*ms.precision, 1.0);
  EXPECT_EQ(*ms.recall, 1.0);
  const Rendered d = render(one_droplet(10.0));
  const MetricSample md =
      evaluate(segment_full(d.image, *reference(DefectKind::droplet)), d.droplet_mask);
  EXPECT_GE(*md.jaccard, 0.7);
  EXPECT_EQ(*md.precision, 1.0);
  EXPECT_EQ(*md.recall, 1.0);
}

TEST(ReferenceSegmenter, DropletKindIgnoresShunts) {
  const Rendered r = render(one_shunt(10.0));
  const BinaryMask pred = segment_full(r.image, *reference(DefectKind::droplet));
  EXPECT_LT(static_cast<double>(popcount(pred)), 0.01 * pred.size());
}

TEST(ReferenceSegmenter, InvariantUnderAffineIntensityChange) {
  SynthSpec spec = one_shunt(10.0);
  spec.droplets = {DropletSpec{{330.0, 1300.0}, 1.6, 12.0, 2.5}};
  const GrayImage base = render(spec).image.round();
  const GrayImage patch = base.block(1100, 250, 256, 256);
  for (DefectKind kind : {DefectKind::shunt, DefectKind::droplet}) {
    const auto seg = reference(kind);
    const BinaryMask want = seg->predict(patch);
    EXPECT_GT(popcount(want), 0);
    for (auto [a, b] : {std::pair{2.0, 100.0}, std::pair{0.5, 3.0},
                        std::pair{4.0, 0.0}, std::pair{1.0, 250.0}}) {
      const GrayImage moved = a * patch + b;
      EXPECT_TRUE((seg->predict(moved) == want).all()) << a << " " << b;
    }
  }
}

TEST(ReferenceSegmenter, DeterministicAndDimensionPreserving) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1000);
  const auto seg = reference(DefectKind::shunt);
  for (int trial = 0; trial < 10; ++trial) {
    GrayImage p(40 + trial, 70 - trial);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
    const BinaryMask a = seg->predict(p);
    EXPECT_EQ(size_of(a), size_of(p));
    EXPECT_TRUE((seg->predict(p) == a).all());
  }
}

TEST(EstimateCellPitch, RecoversStripePeriod) {
  const GrayImage img = render(one_shunt(10.0)).image;
  EXPECT_EQ(estimate_cell_pitch(img.block(0, 0, 256, 256)), 12);
  EXPECT_EQ(estimate_cell_pitch(img.block(1000, 300, 224, 224)), 12);
}

TEST(Open3x3, RemovesSpeckleKeepsBlocks) {
  BinaryMask m = BinaryMask::Constant(10, 10, false);
  m(1, 1) = true;
  m.block(5, 5, 3, 3).setConstant(true);
  const BinaryMask o = open3x3(m);
  EXPECT_FALSE(o(1, 1));
  EXPECT_EQ(popcount(o), 9);
  EXPECT_TRUE(o.block(5, 5, 3, 3).all());
}

}  // namespace
}  // namespace elseg
