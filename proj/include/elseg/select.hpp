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

#ifndef ELSEG_SELECT_HPP_
#define ELSEG_SELECT_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "elseg/metrics.hpp"
#include "elseg/segmenter.hpp"

namespace elseg {

struct Medians {
  double precision = 0.0;
  double recall = 0.0;
  double jaccard = 0.0;
};

struct ModelRecord {
  ModelSpec spec;
  std::vector<MetricSample> samples;
  std::optional<double> median_precision;
  std::optional<double> median_recall;
  std::optional<double> median_jaccard;

  /// Fills the median fields from the samples.
  void update_medians();
  /// True when every median is defined.
  bool selectable() const;
  Medians medians_or_throw() const;
};

/// Lower medians over defined samples. Throws std::invalid_argument if some
/// metric has no defined sample.
Medians medians(const ModelRecord& record);

/// Records not weakly dominated on (precision, recall) by any other record,
/// sorted by precision then id. Records must have defined medians.
std::vector<ModelRecord> pareto_frontier(std::span<const ModelRecord> records);

/// Highest median Jaccard on the frontier; ties go to higher precision, then
/// to the lexicographically smaller id. Unselectable records are skipped.
ModelRecord select_best(std::span<const ModelRecord> records);

/// Groups metric rows by model id into records with medians filled.
std::vector<ModelRecord> group_records(
    std::span<const std::pair<std::string, MetricSample>> rows,
    std::span<const ModelSpec> specs = {});

}  // namespace elseg

#endif  // ELSEG_SELECT_HPP_
