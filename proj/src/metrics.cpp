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

#include "elseg/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace elseg {
namespace {

class UnionFind {
 public:
  UnionFind() : parent_{0} {}

  std::int32_t make() {
    const auto label = static_cast<std::int32_t>(parent_.size());
    parent_.push_back(label);
    return label;
  }

  std::int32_t find(std::int32_t x) {
    std::int32_t root = x;
    while (parent_[root] < root) root = parent_[root];
    while (parent_[x] < x) {
      const std::int32_t next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  std::int32_t unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (a < b) std::swap(a, b);
    parent_[a] = b;
    return b;
  }

  // Rewrites parent_ into final consecutive labels; returns the count.
  int flatten() {
    std::int32_t next = 0;
    for (std::size_t i = 1; i < parent_.size(); ++i) {
      if (parent_[i] < static_cast<std::int32_t>(i)) {
        parent_[i] = parent_[parent_[i]];
      } else {
        parent_[i] = ++next;
      }
    }
    return next;
  }

  std::int32_t operator[](std::int32_t x) const { return parent_[x]; }

 private:
  std::vector<std::int32_t> parent_;
};

}  // namespace

ComponentSet label_components(const BinaryMask& mask,
                              Connectivity connectivity) {
  const Eigen::Index rows = mask.rows();
  const Eigen::Index cols = mask.cols();
  const bool diagonal = connectivity == Connectivity::eight;
  ComponentSet out;
  out.connectivity = connectivity;
  out.labels = LabelImage::Zero(rows, cols);
  auto& labels = out.labels;
  UnionFind uf;

  for (Eigen::Index y = 0; y < rows; ++y) {
    for (Eigen::Index x = 0; x < cols; ++x) {
      if (!mask(y, x)) continue;
      // Neighbours already visited: a=(x-1,y-1) b=(x,y-1) c=(x+1,y-1)
      // d=(x-1,y). Under 8-connectivity b already touches a, c and d.
      const bool has_up = y > 0;
      const std::int32_t b = has_up ? labels(y - 1, x) : 0;
      const std::int32_t d = x > 0 ? labels(y, x - 1) : 0;
      if (b) {
        labels(y, x) = (!diagonal && d) ? uf.unite(b, d) : b;
        continue;
      }
      const std::int32_t a = (diagonal && has_up && x > 0) ? labels(y - 1, x - 1) : 0;
      const std::int32_t c =
          (diagonal && has_up && x + 1 < cols) ? labels(y - 1, x + 1) : 0;
      std::int32_t label = 0;
      if (c) {
        label = c;
        if (a) label = uf.unite(c, a);
        if (d) label = uf.unite(label, d);
      } else if (a) {
        label = a;
        if (d) label = uf.unite(a, d);
      } else if (d) {
        label = d;
      } else {
        label = uf.make();
      }
      labels(y, x) = label;
    }
  }

  out.count = uf.flatten();
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    auto& v = labels.data()[i];
    if (v) v = uf[v];
  }
  return out;
}

std::optional<double> instance(const BinaryMask& a, const BinaryMask& b,
                               Connectivity connectivity) {
  require_congruent(a, b);
  const ComponentSet kb = label_components(b, connectivity);
  if (kb.count == 0) return std::nullopt;
  // Every component of A ∩ B lies inside exactly one component of B, so a
  // component of B is hit iff it contains a pixel of A.
  std::vector<char> hit(kb.count + 1, 0);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a.data()[i] && b.data()[i]) hit[kb.labels.data()[i]] = 1;
  }
  const int hits = std::accumulate(hit.begin() + 1, hit.end(), 0);
  return static_cast<double>(hits) / static_cast<double>(kb.count);
}

MetricSample evaluate(const BinaryMask& pred, const BinaryMask& truth,
                      Connectivity connectivity) {
  MetricSample s;
  s.jaccard = jaccard(pred, truth);
  s.precision = instance(truth, pred, connectivity);
  s.recall = instance(pred, truth, connectivity);
  return s;
}

std::optional<double> lower_median(std::vector<double> xs) {
  if (xs.empty()) return std::nullopt;
  const auto mid = xs.begin() + static_cast<std::ptrdiff_t>((xs.size() - 1) / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  return *mid;
}

std::optional<double> lower_median(std::span<const std::optional<double>> xs) {
  std::vector<double> defined;
  for (const auto& x : xs) {
    if (x) defined.push_back(*x);
  }
  return lower_median(std::move(defined));
}

Baseline estimate_baseline(
    std::span<const std::pair<BinaryMask, BinaryMask>> pairs,
    Connectivity connectivity) {
  if (pairs.empty()) throw std::invalid_argument("no annotation pairs");
  std::vector<std::optional<double>> p, r, j;
  for (const auto& [first, second] : pairs) {
    const MetricSample s = evaluate(second, first, connectivity);
    p.push_back(s.precision);
    r.push_back(s.recall);
    j.push_back(s.jaccard);
  }
  const auto pick = [](std::span<const std::optional<double>> xs,
                       const char* name) {
    const auto m = lower_median(xs);
    if (!m) {
      throw std::invalid_argument(std::string("baseline ") + name +
                                  " is undefined for every pair");
    }
    if (*m <= 0.0) {
      throw std::invalid_argument(std::string("baseline ") + name +
                                  " is zero; annotations never agree");
    }
    return *m;
  };
  return {pick(p, "precision"), pick(r, "recall"), pick(j, "jaccard")};
}

MetricSample normalize(const MetricSample& sample, const Baseline& base) {
  if (base.precision <= 0.0 || base.recall <= 0.0 || base.jaccard <= 0.0) {
    throw std::invalid_argument("baseline values must be positive");
  }
  const auto scale = [](const std::optional<double>& v, double b) {
    return v ? std::optional<double>(std::clamp(*v / b, 0.0, 1.0))
             : std::nullopt;
  };
  MetricSample out = sample;
  out.jaccard = scale(sample.jaccard, base.jaccard);
  out.precision = scale(sample.precision, base.precision);
  out.recall = scale(sample.recall, base.recall);
  return out;
}

}  // namespace elseg
