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

// Command-line front end and the end-to-end runner. This layer owns file
// layouts, the worker pool and the exit-code contract.

#ifndef ELSEG_APP_HPP_
#define ELSEG_APP_HPP_

#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "elseg/aggregate.hpp"
#include "elseg/augment.hpp"
#include "elseg/metrics.hpp"
#include "elseg/select.hpp"
#include "elseg/synth.hpp"

namespace elseg::app {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kFormatVersion = 1;

/// Bad flag values; maps to exit code 1.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// 0 means "all available cores".
int resolve_workers(int requested);

/// Runs fn(0..n-1) on up to workers threads. The first exception thrown by
/// any call is rethrown after all threads join.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

struct MetricRow {
  std::string image_id;
  std::string model_id;
  MetricSample sample;
};

std::string format_metrics_csv(const std::vector<MetricRow>& rows);
std::vector<MetricRow> parse_metrics_csv(const std::string& text);
std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path);

/// Rows of comma-separated cells; blank lines are skipped.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

/// Columns: image_id, then numeric columns (isc_slope and any extras).
std::vector<PerformanceRecord> parse_performance_csv(const std::string& text);

nlohmann::json selection_json(const std::vector<ModelRecord>& records);
std::string pareto_svg(const std::vector<ModelRecord>& records);

struct CandidateGrid {
  std::vector<double> threshold_sigma{2.5, 3.5, 5.0};
  std::vector<int> input_size{224, 256};
};

struct E2EConfig {
  std::uint64_t seed = 7;
  SynthSpec synth = default_demo_template();
  CorpusOptions corpus{50, 0.6, 0.2, 40.0};
  AugmentConfig augment;
  CandidateGrid candidates;
  HeatScale heat_scale = HeatScale::log;
  double heat_clip = 1.0;

  static SynthSpec default_demo_template();
};

E2EConfig e2e_config_from_json(const nlohmann::json& j);

/// synth -> augment -> infer (reference candidates) -> eval -> select ->
/// heatmap. Writes artifacts under out_dir and returns the report, which is
/// also written to out_dir/report.json.
nlohmann::json run_e2e(const E2EConfig& config,
                       const std::filesystem::path& out_dir, int workers);

/// Full CLI; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace elseg::app

#endif  // ELSEG_APP_HPP_
