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

// Slow, obviously-correct reference implementations used by the tests.

#ifndef ELSEG_TESTS_ORACLES_HPP_
#define ELSEG_TESTS_ORACLES_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "elseg/core.hpp"

namespace elseg::oracle {

inline BinaryMask random_mask(int w, int h, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution on(density);
  BinaryMask m(h, w);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = on(rng);
  return m;
}

// Recursive flood fill; components numbered in raster order of their first
// pixel.
struct FloodFill {
  const BinaryMask& mask;
  int connectivity;
  LabelImage labels;
  int count = 0;

  FloodFill(const BinaryMask& m, int conn)
      : mask(m), connectivity(conn), labels(LabelImage::Zero(m.rows(), m.cols())) {
    for (Eigen::Index y = 0; y < mask.rows(); ++y) {
      for (Eigen::Index x = 0; x < mask.cols(); ++x) {
        if (mask(y, x) && labels(y, x) == 0) fill(y, x, ++count);
      }
    }
  }

  void fill(Eigen::Index y, Eigen::Index x, int label) {
    if (y < 0 || x < 0 || y >= mask.rows() || x >= mask.cols()) return;
    if (!mask(y, x) || labels(y, x) != 0) return;
    labels(y, x) = label;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dy == 0 && dx == 0) continue;
        if (connectivity == 4 && dy != 0 && dx != 0) continue;
        fill(y + dy, x + dx, label);
      }
    }
  }
};

inline std::vector<std::set<Eigen::Index>> components(const BinaryMask& m,
                                                      int connectivity) {
  const FloodFill ff(m, connectivity);
  std::vector<std::set<Eigen::Index>> out(ff.count);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (ff.labels.data()[i]) out[ff.labels.data()[i] - 1].insert(i);
  }
  return out;
}

inline std::optional<double> jaccard(const BinaryMask& a, const BinaryMask& b) {
  std::int64_t inter = 0, uni = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    inter += a.data()[i] && b.data()[i];
    uni += a.data()[i] || b.data()[i];
  }
  if (uni == 0) return std::nullopt;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

// The component instance function by direct set enumeration.
inline std::optional<double> instance(const BinaryMask& a, const BinaryMask& b,
                                      int connectivity) {
  const auto kb = components(b, connectivity);
  if (kb.empty()) return std::nullopt;
  const BinaryMask ab = a && b;
  const auto kab = components(ab, connectivity);
  int hit = 0;
  for (const auto& x : kb) {
    bool found = false;
    for (const auto& y : kab) {
      for (Eigen::Index p : y) {
        if (x.count(p)) {
          found = true;
          break;
        }
      }
      if (found) break;
    }
    hit += found;
  }
  return static_cast<double>(hit) / static_cast<double>(kb.size());
}

// Indices of points not dominated by any other point (>= on both, > on one).
inline std::vector<std::size_t> pareto(
    const std::vector<std::pair<double, double>>& pts) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
      if (i == j) continue;
      dominated = pts[j].first >= pts[i].first && pts[j].second >= pts[i].second &&
                  (pts[j].first > pts[i].first || pts[j].second > pts[i].second);
    }
    if (!dominated) out.push_back(i);
  }
  return out;
}

}  // namespace elseg::oracle

#endif  // ELSEG_TESTS_ORACLES_HPP_
