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

#include <cmath>
#include <random>

#include "elseg/aggregate.hpp"

namespace elseg {
namespace {

TEST(HeatMap, ProbabilityIsCountOverImages) {
  std::mt19937_64 rng(14);
  std::vector<int> hits(6000, 0);
  std::fill(hits.begin(), hits.begin() + 148, 1);
  std::shuffle(hits.begin(), hits.end(), rng);
  std::bernoulli_distribution coin(0.3);
  HeatMap map({5, 4});
  for (int h : hits) {
    BinaryMask m(4, 5);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = coin(rng);
    m(2, 3) = h == 1;
    map.add(m);
  }
  EXPECT_EQ(map.n_images(), 6000);
  EXPECT_EQ(map.counts()(2, 3), 148);
  EXPECT_EQ(map.probability()(2, 3), 148.0 / 6000.0);
}

TEST(HeatMap, MergeMatchesSequentialAccumulation) {
  std::mt19937_64 rng(15);
  std::bernoulli_distribution coin(0.2);
  std::vector<BinaryMask> masks;
  for (int i = 0; i < 60; ++i) {
    BinaryMask m(6, 7);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = coin(rng);
    masks.push_back(m);
  }
  const HeatMap all = accumulate(masks);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<HeatMap> parts(1 + trial % 5);
    std::uniform_int_distribution<std::size_t> pick(0, parts.size() - 1);
    for (const auto& m : masks) parts[pick(rng)].add(m);
    std::shuffle(parts.begin(), parts.end(), rng);
    HeatMap left;
    for (const auto& p : parts) left.merge(p);
    HeatMap right;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
      HeatMap tmp = *it;
      tmp.merge(right);
      right = tmp;
    }
    EXPECT_TRUE(left == all);
    EXPECT_TRUE(right == all);
  }
  HeatMap other({3, 3});
  other.add(BinaryMask::Constant(3, 3, true));
  HeatMap copy = all;
  EXPECT_THROW(copy.merge(other), std::invalid_argument);
}

TEST(HeatMap, ResamplesMasksOntoItsGrid) {
  HeatMap map({2, 2});
  BinaryMask m = BinaryMask::Constant(4, 4, false);
  m.topLeftCorner(2, 2).setConstant(true);
  map.add(m);
  EXPECT_EQ(map.counts()(0, 0), 1);
  EXPECT_EQ(map.counts().sum(), 1);
}

TEST(RenderHeatmap, UniformCountsRenderWhite) {
  HeatMap map({3, 2});
  for (int i = 0; i < 4; ++i) map.add(BinaryMask::Constant(2, 3, true));
  const HeatRender r = render_heatmap(map, HeatScale::linear, 0.0);
  EXPECT_TRUE((r.image == 255.0).all());
  EXPECT_DOUBLE_EQ(r.legend.white_level, 1.0);
  EXPECT_DOUBLE_EQ(r.legend.probability[255], 1.0);
  EXPECT_DOUBLE_EQ(r.legend.probability[0], 0.0);
}

TEST(RenderHeatmap, ClipSaturatesTopPercent) {
  HeatMap map({100, 1});
  for (int k = 1; k <= 100; ++k) {
    BinaryMask m(1, 100);
    for (int x = 0; x < 100; ++x) m(0, x) = x < 101 - k;
    map.add(m);
  }
  // column x was hit 100 - x times
  const HeatRender r = render_heatmap(map, HeatScale::linear, 1.0);
  EXPECT_DOUBLE_EQ(r.legend.white_level, 0.99);
  EXPECT_EQ(r.image(0, 0), 255.0);
  EXPECT_EQ(r.image(0, 1), 255.0);
  EXPECT_LT(r.image(0, 2), 255.0);
  EXPECT_EQ(r.image(0, 99), std::round(255.0 / 99.0));
  EXPECT_THROW(render_heatmap(map, HeatScale::linear, 100.0), std::invalid_argument);
}

TEST(RenderHeatmap, LogScaleCompressesRange) {
  EXPECT_NEAR(heat_value(1000, 6000, HeatScale::log) / heat_value(1, 6000, HeatScale::log),
              9.967, 1e-3);
  EXPECT_DOUBLE_EQ(heat_value(0, 10, HeatScale::log), 0.0);
  EXPECT_DOUBLE_EQ(heat_value(3, 10, HeatScale::linear), 0.3);
  HeatMap map({2, 1});
  BinaryMask both = BinaryMask::Constant(1, 2, true);
  BinaryMask left(1, 2);
  left << true, false;
  map.add(both);
  for (int i = 0; i < 3; ++i) map.add(left);
  const HeatRender r = render_heatmap(map, HeatScale::log, 0.0);
  EXPECT_EQ(r.image(0, 0), 255.0);
  EXPECT_EQ(r.image(0, 1), 110.0);
  EXPECT_NEAR(r.legend.probability[255], 1.0, 1e-12);
}

TEST(Correlate, PerfectLinearRelation) {
  std::vector<std::pair<std::string, double>> counts;
  std::vector<PerformanceRecord> perf;
  for (int i = 0; i < 10; ++i) {
    counts.emplace_back("m" + std::to_string(i), i);
    perf.push_back({"m" + std::to_string(i), {{"isc_slope", 2.0 - 0.5 * i}}});
  }
  counts.emplace_back("unmatched", 5.0);
  const Correlation c = correlate(counts, perf, "isc_slope");
  EXPECT_NEAR(c.pearson_r, -1.0, 1e-12);
  EXPECT_EQ(c.scatter.size(), 10u);
  EXPECT_THROW(correlate(counts, perf, "rsh"), std::invalid_argument);
}

TEST(Correlate, IndependentNoiseIsNearZero) {
  std::mt19937_64 rng(16);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> x(1000), y(1000);
  for (int i = 0; i < 1000; ++i) {
    x[i] = n(rng);
    y[i] = n(rng);
  }
  EXPECT_LT(std::abs(pearson(x, y)), 0.1);
}

TEST(Correlate, ConstantInputIsUndefined) {
  const std::vector<double> x{1, 1, 1, 1}, y{1, 2, 3, 4};
  EXPECT_THROW(pearson(x, y), std::invalid_argument);
  EXPECT_THROW(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}),
               std::invalid_argument);
}

}  // namespace
}  // namespace elseg
