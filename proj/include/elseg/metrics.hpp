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

#ifndef ELSEG_METRICS_HPP_
#define ELSEG_METRICS_HPP_

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "elseg/core.hpp"

namespace elseg {

/// Connected components of a binary mask.
struct ComponentSet {
  LabelImage labels;  // 0 background, components numbered 1..count
  int count = 0;
  Connectivity connectivity = Connectivity::eight;
};

/// Two-pass scan with an array-based union-find (smallest provisional label
/// is always the root). Labels are assigned in raster order of each
/// component's first pixel.
ComponentSet label_components(const BinaryMask& mask,
                              Connectivity connectivity = Connectivity::eight);

template <typename DerivedA, typename DerivedB>
void require_congruent(const Eigen::DenseBase<DerivedA>& a,
                       const Eigen::DenseBase<DerivedB>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(
        "mask dimensions differ: " + std::to_string(a.cols()) + "x" +
        std::to_string(a.rows()) + " vs " + std::to_string(b.cols()) + "x" +
        std::to_string(b.rows()));
  }
}

/// |A ∩ B| / |A ∪ B|; empty when both masks are empty.
template <typename DerivedA, typename DerivedB>
std::optional<double> jaccard(const Eigen::DenseBase<DerivedA>& a,
                              const Eigen::DenseBase<DerivedB>& b) {
  require_congruent(a, b);
  const auto inter = popcount(a.derived() && b.derived());
  const auto uni = popcount(a.derived() || b.derived());
  if (uni == 0) return std::nullopt;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Component instance function I(A, B): the fraction of connected
/// components of B touched by a component of A ∩ B. Empty when B has no
/// components.
std::optional<double> instance(const BinaryMask& a, const BinaryMask& b,
                               Connectivity connectivity = Connectivity::eight);

struct MetricSample {
  std::string image_id;
  std::optional<double> jaccard;
  std::optional<double> precision;
  std::optional<double> recall;
};

/// Precision is I(truth, pred), recall is I(pred, truth).
MetricSample evaluate(const BinaryMask& pred, const BinaryMask& truth,
                      Connectivity connectivity = Connectivity::eight);

struct Baseline {
  double precision = 1.0;
  double recall = 1.0;
  double jaccard = 1.0;
};

/// Lower median (always an element of the sample) over the defined values.
/// Empty when no value is defined.
std::optional<double> lower_median(std::span<const std::optional<double>> xs);
std::optional<double> lower_median(std::vector<double> xs);

/// Scores each pair with the first annotation as truth and the second as
/// prediction and takes per-metric lower medians. Throws on empty input or a
/// metric whose median is undefined or zero.
Baseline estimate_baseline(
    std::span<const std::pair<BinaryMask, BinaryMask>> pairs,
    Connectivity connectivity = Connectivity::eight);

/// Divides each defined metric by its baseline and clamps to [0, 1].
MetricSample normalize(const MetricSample& sample, const Baseline& base);

}  // namespace elseg

#endif  // ELSEG_METRICS_HPP_
