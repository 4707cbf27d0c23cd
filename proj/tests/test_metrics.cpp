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

#include "elseg/metrics.hpp"
#include "oracles.hpp"

namespace elseg {
namespace {

BinaryMask grid(int w, int h, std::initializer_list<std::pair<int, int>> on) {
  BinaryMask m = BinaryMask::Constant(h, w, false);
  for (auto [x, y] : on) m(y, x) = true;
  return m;
}

BinaryMask block(int w, int h, int x0, int y0, int bw, int bh) {
  BinaryMask m = BinaryMask::Constant(h, w, false);
  m.block(y0, x0, bh, bw).setConstant(true);
  return m;
}

TEST(LabelComponents, EmptyAndFullMasks) {
  EXPECT_EQ(label_components(BinaryMask::Constant(5, 7, false)).count, 0);
  const ComponentSet full = label_components(BinaryMask::Constant(5, 7, true));
  EXPECT_EQ(full.count, 1);
  EXPECT_TRUE((full.labels == 1).all());
}

TEST(LabelComponents, DiagonalNeighboursDependOnConnectivity) {
  const BinaryMask m = grid(2, 2, {{0, 0}, {1, 1}});
  EXPECT_EQ(label_components(m, Connectivity::eight).count, 1);
  EXPECT_EQ(label_components(m, Connectivity::four).count, 2);
}

TEST(LabelComponents, LabelsFollowRasterOrderOfFirstPixel) {
  // A U shape whose right arm starts first would get label 2 under a naive
  // scan without relabelling.
  BinaryMask m = BinaryMask::Constant(4, 6, false);
  m(0, 0) = m(1, 0) = m(2, 0) = m(3, 0) = m(3, 1) = m(3, 2) = true;
  m(0, 2) = m(1, 2) = m(2, 2) = true;
  m(0, 5) = true;
  const ComponentSet c = label_components(m, Connectivity::four);
  EXPECT_EQ(c.count, 2);
  EXPECT_EQ(c.labels(0, 0), 1);
  EXPECT_EQ(c.labels(0, 2), 1);
  EXPECT_EQ(c.labels(0, 5), 2);
}

TEST(LabelComponents, MatchesFloodFillOracle) {
  std::mt19937_64 rng(17);
  for (int conn : {4, 8}) {
    for (int trial = 0; trial < 200; ++trial) {
      const double density = 0.1 + 0.8 * (trial % 9) / 8.0;
      const BinaryMask m = oracle::random_mask(33, 21, density, rng);
      const ComponentSet got = label_components(m, static_cast<Connectivity>(conn));
      const oracle::FloodFill want(m, conn);
      ASSERT_EQ(got.count, want.count);
      ASSERT_TRUE((got.labels == want.labels).all());
      EXPECT_EQ(static_cast<int>(got.connectivity), conn);
    }
  }
}

TEST(Jaccard, IdenticalDisjointAndShiftedBlocks) {
  const BinaryMask a = block(5, 3, 0, 0, 3, 3);
  EXPECT_EQ(*jaccard(a, a), 1.0);
  EXPECT_EQ(*jaccard(a, block(5, 3, 3, 0, 2, 3)), 0.0);
  const BinaryMask shifted = block(5, 3, 1, 0, 3, 3);
  EXPECT_EQ(*jaccard(a, shifted), 6.0 / 12.0);
}

TEST(Jaccard, UndefinedWhenBothEmptyAndRejectsMismatch) {
  const BinaryMask e = BinaryMask::Constant(3, 3, false);
  EXPECT_FALSE(jaccard(e, e).has_value());
  EXPECT_THROW(jaccard(e, BinaryMask::Constant(3, 4, false)), std::invalid_argument);
}

TEST(Jaccard, MatchesOracleAndIsSymmetric) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const BinaryMask a = oracle::random_mask(16, 12, 0.05 * (trial % 10), rng);
    const BinaryMask b = oracle::random_mask(16, 12, 0.05 * (trial % 7), rng);
    const auto j = jaccard(a, b);
    ASSERT_EQ(j, oracle::jaccard(a, b));
    ASSERT_EQ(j, jaccard(b, a));
    if (j) {
      EXPECT_GE(*j, 0.0);
      EXPECT_LE(*j, 1.0);
      EXPECT_EQ(*j == 1.0, (a == b).all());
    }
  }
}

TEST(Instance, IdenticalMasksScoreOne) {
  const BinaryMask m = grid(6, 6, {{0, 0}, {3, 3}, {5, 0}});
  EXPECT_EQ(*instance(m, m), 1.0);
}

TEST(Instance, HalfOfTwoComponentsHit) {
  const BinaryMask b = grid(6, 1, {{0, 0}, {4, 0}});
  const BinaryMask a = grid(6, 1, {{0, 0}});
  EXPECT_EQ(*instance(a, b), 0.5);
}

TEST(Instance, UndefinedWithoutComponents) {
  const BinaryMask a = grid(3, 3, {{1, 1}});
  EXPECT_FALSE(instance(a, BinaryMask::Constant(3, 3, false)).has_value());
}

TEST(Instance, IsNotSymmetric) {
  // One bar against three dots, two of which lie on the bar.
  const BinaryMask b = block(7, 1, 0, 0, 4, 1);
  const BinaryMask a = grid(7, 1, {{0, 0}, {2, 0}, {6, 0}});
  EXPECT_EQ(*instance(a, b), 1.0);
  EXPECT_DOUBLE_EQ(*instance(b, a), 2.0 / 3.0);
}

TEST(Instance, MatchesSetEnumerationOracle) {
  std::mt19937_64 rng(23);
  for (int conn : {4, 8}) {
    for (int trial = 0; trial < 200; ++trial) {
      const BinaryMask a = oracle::random_mask(14, 11, 0.05 + 0.05 * (trial % 8), rng);
      const BinaryMask b = oracle::random_mask(14, 11, 0.05 + 0.05 * (trial % 5), rng);
      const auto c = static_cast<Connectivity>(conn);
      ASSERT_EQ(instance(a, b, c), oracle::instance(a, b, conn));
      const auto v = instance(a, b, c);
      if (v) {
        EXPECT_GE(*v, 0.0);
        EXPECT_LE(*v, 1.0);
      }
    }
  }
}

TEST(Evaluate, PerfectPrediction) {
  const BinaryMask t = grid(5, 5, {{0, 0}, {4, 4}});
  const MetricSample s = evaluate(t, t);
  EXPECT_EQ(*s.jaccard, 1.0);
  EXPECT_EQ(*s.precision, 1.0);
  EXPECT_EQ(*s.recall, 1.0);
}

TEST(Evaluate, SpuriousComponentLowersPrecision) {
  const BinaryMask truth = grid(9, 1, {{0, 0}, {2, 0}, {4, 0}});
  const BinaryMask pred = grid(9, 1, {{0, 0}, {2, 0}, {4, 0}, {8, 0}});
  const MetricSample s = evaluate(pred, truth);
  EXPECT_EQ(*s.recall, 1.0);
  EXPECT_EQ(*s.precision, 0.75);
}

TEST(Evaluate, EmptyPrediction) {
  const BinaryMask truth = grid(4, 4, {{1, 1}});
  const MetricSample s = evaluate(BinaryMask::Constant(4, 4, false), truth);
  EXPECT_EQ(*s.jaccard, 0.0);
  EXPECT_EQ(*s.recall, 0.0);
  EXPECT_FALSE(s.precision.has_value());
}

TEST(Evaluate, RecallUnchangedByGrowingAHitComponent) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const BinaryMask truth = oracle::random_mask(12, 12, 0.2, rng);
    BinaryMask pred = oracle::random_mask(12, 12, 0.2, rng);
    const auto before = evaluate(pred, truth).recall;
    const ComponentSet tc = label_components(truth);
    // Pick a truth pixel whose component is already hit and add it to pred.
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
      if (!truth.data()[i] || pred.data()[i]) continue;
      const auto label = tc.labels.data()[i];
      bool hit = false;
      for (Eigen::Index k = 0; k < truth.size(); ++k) {
        hit = hit || (tc.labels.data()[k] == label && pred.data()[k]);
      }
      if (!hit) continue;
      pred.data()[i] = true;
      EXPECT_EQ(evaluate(pred, truth).recall, before);
      break;
    }
  }
}

TEST(LowerMedian, TakesTheLowerMiddleElement) {
  const std::vector<std::optional<double>> odd{0.2, 0.8, 0.5};
  EXPECT_EQ(*lower_median(odd), 0.5);
  const std::vector<std::optional<double>> even{0.4, 0.1, 0.9, 0.3};
  EXPECT_EQ(*lower_median(even), 0.3);
  const std::vector<std::optional<double>> one{0.7};
  EXPECT_EQ(*lower_median(one), 0.7);
  const std::vector<std::optional<double>> gaps{std::nullopt, 0.6, std::nullopt};
  EXPECT_EQ(*lower_median(gaps), 0.6);
  const std::vector<std::optional<double>> none{std::nullopt, std::nullopt};
  EXPECT_FALSE(lower_median(none).has_value());
}

TEST(EstimateBaseline, IdenticalAnnotationsGiveOnes) {
  const BinaryMask m = grid(6, 6, {{1, 1}, {4, 4}});
  const std::vector<std::pair<BinaryMask, BinaryMask>> pairs{{m, m}, {m, m}};
  const Baseline b = estimate_baseline(pairs);
  EXPECT_EQ(b.precision, 1.0);
  EXPECT_EQ(b.recall, 1.0);
  EXPECT_EQ(b.jaccard, 1.0);
}

TEST(EstimateBaseline, SinglePairEqualsItsMetrics) {
  const BinaryMask first = grid(9, 1, {{0, 0}, {2, 0}, {4, 0}, {6, 0}});
  const BinaryMask second = grid(9, 1, {{0, 0}, {2, 0}, {4, 0}, {8, 0}});
  const std::vector<std::pair<BinaryMask, BinaryMask>> pairs{{first, second}};
  const Baseline b = estimate_baseline(pairs);
  const MetricSample s = evaluate(second, first);
  EXPECT_EQ(b.precision, *s.precision);
  EXPECT_EQ(b.recall, *s.recall);
  EXPECT_EQ(b.jaccard, *s.jaccard);
  EXPECT_EQ(b.jaccard, 3.0 / 5.0);
}

TEST(EstimateBaseline, RejectsEmptyInput) {
  EXPECT_THROW(estimate_baseline({}), std::invalid_argument);
}

TEST(Normalize, DividesAndClamps) {
  const Baseline shunt_base{0.8, 0.8, 0.24};
  MetricSample s{"x", 0.19, std::nullopt, 0.9};
  const MetricSample n = normalize(s, shunt_base);
  EXPECT_DOUBLE_EQ(*n.jaccard, 0.19 / 0.24);
  EXPECT_NEAR(*n.jaccard, 0.792, 1e-3);
  EXPECT_EQ(*n.recall, 1.0);
  EXPECT_FALSE(n.precision.has_value());
  EXPECT_EQ(n.image_id, "x");
}

TEST(Normalize, RejectsZeroBaseline) {
  EXPECT_THROW(normalize(MetricSample{}, Baseline{0.8, 0.8, 0.0}),
               std::invalid_argument);
}

}  // namespace
}  // namespace elseg
