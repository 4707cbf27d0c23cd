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

#include "elseg/select.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace elseg {
namespace {

std::vector<std::optional<double>> column(
    const std::vector<MetricSample>& samples,
    std::optional<double> MetricSample::*field) {
  std::vector<std::optional<double>> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.*field);
  return out;
}

}  // namespace

void ModelRecord::update_medians() {
  median_precision = lower_median(column(samples, &MetricSample::precision));
  median_recall = lower_median(column(samples, &MetricSample::recall));
  median_jaccard = lower_median(column(samples, &MetricSample::jaccard));
}

bool ModelRecord::selectable() const {
  return median_precision && median_recall && median_jaccard;
}

Medians ModelRecord::medians_or_throw() const {
  if (!selectable()) {
    throw std::invalid_argument("model '" + spec.id +
                                "' has a metric with no defined sample");
  }
  return {*median_precision, *median_recall, *median_jaccard};
}

Medians medians(const ModelRecord& record) {
  ModelRecord copy = record;
  copy.update_medians();
  return copy.medians_or_throw();
}

std::vector<ModelRecord> pareto_frontier(std::span<const ModelRecord> records) {
  if (records.empty()) throw std::invalid_argument("no model records");
  std::vector<std::size_t> idx(records.size());
  std::vector<Medians> m(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    idx[i] = i;
    m[i] = records[i].medians_or_throw();
  }
  // Sweep by descending precision. A record survives iff its recall is the
  // best among equal precision and strictly beats every higher precision.
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (m[a].precision != m[b].precision) return m[a].precision > m[b].precision;
    return m[a].recall > m[b].recall;
  });
  std::vector<ModelRecord> out;
  bool any_above = false;
  double best_above = 0.0;
  for (std::size_t g = 0; g < idx.size();) {
    std::size_t end = g;
    while (end < idx.size() && m[idx[end]].precision == m[idx[g]].precision) ++end;
    const double top = m[idx[g]].recall;
    if (!any_above || top > best_above) {
      for (std::size_t k = g; k < end && m[idx[k]].recall == top; ++k) {
        out.push_back(records[idx[k]]);
      }
    }
    if (!any_above || top > best_above) best_above = top;
    any_above = true;
    g = end;
  }
  std::sort(out.begin(), out.end(), [](const ModelRecord& a, const ModelRecord& b) {
    if (*a.median_precision != *b.median_precision) {
      return *a.median_precision < *b.median_precision;
    }
    return a.spec.id < b.spec.id;
  });
  return out;
}

ModelRecord select_best(std::span<const ModelRecord> records) {
  std::vector<ModelRecord> usable;
  for (const auto& r : records) {
    if (r.selectable()) usable.push_back(r);
  }
  if (usable.empty()) throw std::invalid_argument("no selectable model records");
  const auto frontier = pareto_frontier(usable);
  const auto better = [](const ModelRecord& a, const ModelRecord& b) {
    if (*a.median_jaccard != *b.median_jaccard) {
      return *a.median_jaccard > *b.median_jaccard;
    }
    if (*a.median_precision != *b.median_precision) {
      return *a.median_precision > *b.median_precision;
    }
    return a.spec.id < b.spec.id;
  };
  return *std::min_element(frontier.begin(), frontier.end(), better);
}

std::vector<ModelRecord> group_records(
    std::span<const std::pair<std::string, MetricSample>> rows,
    std::span<const ModelSpec> specs) {
  std::map<std::string, ModelRecord> by_id;
  for (const auto& [model, sample] : rows) {
    auto [it, fresh] = by_id.try_emplace(model);
    if (fresh) {
      const auto known = std::find_if(specs.begin(), specs.end(),
                                      [&](const ModelSpec& s) { return s.id == model; });
      if (known != specs.end()) {
        it->second.spec = *known;
      } else {
        it->second.spec.id = model;
      }
    }
    it->second.samples.push_back(sample);
  }
  std::vector<ModelRecord> out;
  for (auto& [id, rec] : by_id) {
    rec.update_medians();
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace elseg
