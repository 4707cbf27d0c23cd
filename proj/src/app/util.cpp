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

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "elseg/app.hpp"
#include "elseg/io.hpp"

namespace elseg::app {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::vector<std::string>> csv_records(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    out.push_back(split_csv_line(line));
  }
  return out;
}

double parse_double(const std::string& cell, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw FormatError("line " + std::to_string(line) + ": '" + cell +
                      "' is not a number");
  }
  return v;
}

std::optional<double> parse_optional(const std::string& cell, std::size_t line) {
  if (cell.empty()) return std::nullopt;
  return parse_double(cell, line);
}

std::string format_optional(const std::optional<double>& v) {
  return v ? fmt::format("{}", *v) : std::string();
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn) {
  const auto threads =
      std::min<std::size_t>(n, static_cast<std::size_t>(resolve_workers(workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

std::string format_metrics_csv(const std::vector<MetricRow>& rows) {
  std::string out = "image_id,model_id,jaccard,precision,recall\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{}\n", r.image_id, r.model_id,
                       format_optional(r.sample.jaccard),
                       format_optional(r.sample.precision),
                       format_optional(r.sample.recall));
  }
  return out;
}

std::vector<MetricRow> parse_metrics_csv(const std::string& text) {
  const auto records = csv_records(text);
  if (records.empty()) throw FormatError("metrics CSV is empty");
  const std::vector<std::string> expected = {"image_id", "model_id", "jaccard",
                                             "precision", "recall"};
  if (records.front() != expected) {
    throw FormatError(
        "metrics CSV header must be image_id,model_id,jaccard,precision,recall");
  }
  std::vector<MetricRow> rows;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& cells = records[i];
    if (cells.size() != 5) {
      throw FormatError("line " + std::to_string(i + 1) + ": expected 5 columns");
    }
    MetricRow row;
    row.image_id = cells[0];
    row.model_id = cells[1];
    row.sample.image_id = cells[0];
    row.sample.jaccard = parse_optional(cells[2], i + 1);
    row.sample.precision = parse_optional(cells[3], i + 1);
    row.sample.recall = parse_optional(cells[4], i + 1);
    for (const auto& v : {row.sample.jaccard, row.sample.precision, row.sample.recall}) {
      if (v && (*v < 0.0 || *v > 1.0)) {
        throw FormatError("line " + std::to_string(i + 1) + ": metric outside [0, 1]");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path) {
  return parse_metrics_csv(read_text(path));
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  return csv_records(text);
}

std::vector<PerformanceRecord> parse_performance_csv(const std::string& text) {
  const auto records = csv_records(text);
  if (records.empty() || records.front().empty() ||
      records.front().front() != "image_id") {
    throw FormatError("performance CSV must start with an image_id column");
  }
  const auto& header = records.front();
  std::vector<PerformanceRecord> out;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& cells = records[i];
    if (cells.size() != header.size()) {
      throw FormatError("line " + std::to_string(i + 1) + ": expected " +
                        std::to_string(header.size()) + " columns");
    }
    PerformanceRecord rec;
    rec.image_id = cells[0];
    for (std::size_t c = 1; c < cells.size(); ++c) {
      rec.values[header[c]] = parse_double(cells[c], i + 1);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

nlohmann::json selection_json(const std::vector<ModelRecord>& records) {
  nlohmann::json models = nlohmann::json::array();
  std::vector<ModelRecord> usable;
  for (const auto& r : records) {
    models.push_back({{"id", r.spec.id},
                      {"samples", r.samples.size()},
                      {"median_precision", optional_json(r.median_precision)},
                      {"median_recall", optional_json(r.median_recall)},
                      {"median_jaccard", optional_json(r.median_jaccard)}});
    if (r.selectable()) usable.push_back(r);
  }
  nlohmann::json out = {{"format_version", kFormatVersion}, {"models", models}};
  if (usable.empty()) {
    out["frontier"] = nlohmann::json::array();
    out["best"] = nullptr;
    return out;
  }
  nlohmann::json frontier = nlohmann::json::array();
  for (const auto& r : pareto_frontier(usable)) frontier.push_back(r.spec.id);
  out["frontier"] = frontier;
  out["best"] = select_best(usable).spec.id;
  return out;
}

std::string pareto_svg(const std::vector<ModelRecord>& records) {
  constexpr double kSize = 480.0;
  constexpr double kMargin = 50.0;
  const auto px = [](double recall) { return kMargin + recall * (kSize - 2 * kMargin); };
  const auto py = [](double precision) {
    return kSize - kMargin - precision * (kSize - 2 * kMargin);
  };
  std::vector<ModelRecord> usable;
  for (const auto& r : records) {
    if (r.selectable()) usable.push_back(r);
  }
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<rect x=\"{1}\" y=\"{1}\" width=\"{2}\" height=\"{2}\" fill=\"none\" "
      "stroke=\"#888\"/>\n"
      "<text x=\"{3}\" y=\"{4}\" text-anchor=\"middle\">median recall</text>\n"
      "<text x=\"15\" y=\"{3}\" transform=\"rotate(-90 15 {3})\" "
      "text-anchor=\"middle\">median precision</text>\n",
      kSize, kMargin, kSize - 2 * kMargin, kSize / 2, kSize - 15);
  for (const auto& r : usable) {
    svg += fmt::format(
        "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"#444\"><title>{}"
        "</title></circle>\n",
        px(*r.median_recall), py(*r.median_precision), r.spec.id);
  }
  if (!usable.empty()) {
    std::string points;
    for (const auto& r : pareto_frontier(usable)) {
      points += fmt::format("{:.2f},{:.2f} ", px(*r.median_recall),
                            py(*r.median_precision));
    }
    svg += "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"" +
           points + "\"/>\n";
    const ModelRecord best = select_best(usable);
    svg += fmt::format(
        "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"8\" fill=\"none\" "
        "stroke=\"red\" stroke-width=\"2\"><title>{}</title></circle>\n",
        px(*best.median_recall), py(*best.median_precision), best.spec.id);
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace elseg::app
