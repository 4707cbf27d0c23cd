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

#include <map>
#include <memory>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "elseg/app.hpp"
#include "elseg/io.hpp"
#include "elseg/segmenter.hpp"
#include "elseg/tiling.hpp"

namespace elseg::app {
namespace fs = std::filesystem;
namespace {

struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::exception& e)
      : std::runtime_error("stage '" + stage + "': " + e.what()) {}
};

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
  spdlog::info("e2e: {}", name);
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e);
  }
}

struct Candidate {
  ModelSpec spec;
  ReferenceOptions options;
};

std::vector<Candidate> candidates(const CandidateGrid& grid, DefectKind kind) {
  std::vector<Candidate> out;
  for (int size : grid.input_size) {
    for (double k : grid.threshold_sigma) {
      Candidate c;
      c.options.kind = kind;
      c.options.threshold_sigma = k;
      c.spec.id = fmt::format("reference-{}-k{}-{}", to_string(kind), k, size);
      c.spec.input_size = size;
      c.spec.params = {{"kind", std::string(to_string(kind))},
                       {"threshold_sigma", fmt::format("{}", k)}};
      validate_spec(c.spec);
      out.push_back(std::move(c));
    }
  }
  return out;
}

struct LabelledImage {
  std::string id;
  GrayImage image;
  BinaryMask truth;
};

std::vector<LabelledImage> load_split(const DatasetManifest& m, DefectKind kind,
                                      std::optional<Split> split, int workers) {
  std::vector<ManifestEntry> entries;
  for (const auto& e : m.entries) {
    if (e.kind == kind && (!split || e.split == *split)) entries.push_back(e);
  }
  std::vector<LabelledImage> out(entries.size());
  parallel_for(entries.size(), workers, [&](std::size_t i) {
    const auto& e = entries[i];
    out[i] = {e.image_id(), load_image(m.resolve(e.image)),
              load_mask(m.resolve(*e.mask))};
  });
  return out;
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json medians_json(const ModelRecord& r) {
  return {{"precision", optional_json(r.median_precision)},
          {"recall", optional_json(r.median_recall)},
          {"jaccard", optional_json(r.median_jaccard)},
          {"samples", r.samples.size()}};
}

}  // namespace

SynthSpec E2EConfig::default_demo_template() {
  SynthSpec s = SynthSpec::standard();
  s.noise_sigma = 10.0;
  s.shunts = {ShuntSpec{{0, 0}, 0.6, 12.0}};
  s.droplets = {DropletSpec{{0, 0}, 1.6, 12.0, 2.5}};
  return s;
}

E2EConfig e2e_config_from_json(const nlohmann::json& j) {
  E2EConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("synth")) c.synth = synth_spec_from_json(j["synth"]);
    c.corpus.count = j.value("modules", c.corpus.count);
    if (j.contains("splits")) {
      c.corpus.train_fraction = j["splits"].value("train", c.corpus.train_fraction);
      c.corpus.test_fraction = j["splits"].value("test", c.corpus.test_fraction);
    }
    if (j.contains("augment")) c.augment = augment_config_from_json(j["augment"]);
    if (j.contains("candidates")) {
      const auto& cj = j["candidates"];
      c.candidates.threshold_sigma =
          cj.value("threshold_sigma", c.candidates.threshold_sigma);
      c.candidates.input_size = cj.value("input_size", c.candidates.input_size);
    }
    if (j.contains("heatmap")) {
      const auto scale = j["heatmap"].value("scale", std::string("log"));
      if (scale != "log" && scale != "linear") {
        throw FormatError("heatmap scale must be 'log' or 'linear'");
      }
      c.heat_scale = scale == "log" ? HeatScale::log : HeatScale::linear;
      c.heat_clip = j["heatmap"].value("clip", c.heat_clip);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed run config: ") + e.what());
  }
  if (c.candidates.threshold_sigma.empty() || c.candidates.input_size.empty()) {
    throw FormatError("candidate grid must be non-empty");
  }
  return c;
}

nlohmann::json run_e2e(const E2EConfig& config, const fs::path& out_dir,
                       int workers) {
  fs::create_directories(out_dir);
  nlohmann::json report = {{"format_version", kFormatVersion},
                           {"seed", config.seed}};

  // synth
  const fs::path corpus_dir = out_dir / "corpus";
  DatasetManifest manifest = stage("synth", [&] {
    SynthSpec tmpl = config.synth;
    tmpl.seed = config.seed;
    const auto items = plan_corpus(tmpl, config.corpus, std::nullopt);
    parallel_for(items.size(), workers,
                 [&](std::size_t i) { write_corpus_item(items[i], corpus_dir); });
    DatasetManifest m = corpus_manifest(items);
    write_manifest(corpus_dir / "manifest.json", m);
    return parse_manifest(corpus_dir / "manifest.json");
  });
  report["corpus"] = {
      {"modules", config.corpus.count},
      {"train", manifest.count(DefectKind::shunt, Split::train)},
      {"test", manifest.count(DefectKind::shunt, Split::test)},
      {"final", manifest.count(DefectKind::shunt, Split::final)},
      {"shunts_per_module", config.synth.shunts.size()},
      {"droplets_per_module", config.synth.droplets.size()}};

  for (DefectKind kind : {DefectKind::shunt, DefectKind::droplet}) {
    const std::string kname(to_string(kind));
    nlohmann::json section;

    // augment: enumerate the shuffled patch plan of the training split
    section["augment"] = stage("augment/" + kname, [&] {
      AugmentConfig a = config.augment;
      a.shuffle_seed = config.seed;
      if (manifest.count(kind, Split::train) == 0) {
        return nlohmann::json{{"patches", 0}, {"digest", nullptr}};
      }
      const auto plan = plan_patches(SourceSet::from_manifest(manifest, kind), a);
      nlohmann::json prov = nlohmann::json::array();
      for (const auto& p : plan) prov.push_back(to_json(p));
      return nlohmann::json{{"patches", plan.size()},
                            {"digest", sha256_hex(prov.dump())}};
    });

    // infer + eval on the test split
    const auto models = candidates(config.candidates, kind);
    // Predictions are kept per (model, image) for reuse by the heat map.
    std::vector<std::string> test_ids;
    std::vector<BinaryMask> test_preds;
    std::vector<MetricRow> rows = stage("infer+eval/" + kname, [&] {
      const auto test = load_split(manifest, kind, Split::test, workers);
      for (const auto& img : test) test_ids.push_back(img.id);
      test_preds.resize(models.size() * test.size());
      std::vector<MetricRow> out(models.size() * test.size());
      parallel_for(out.size(), workers, [&](std::size_t idx) {
        const Candidate& c = models[idx / test.size()];
        const LabelledImage& img = test[idx % test.size()];
        const auto seg = reference_segmenter(c.options, c.spec);
        test_preds[idx] = segment_full(img.image, *seg);
        MetricSample s = evaluate(test_preds[idx], img.truth);
        s.image_id = img.id;
        out[idx] = {img.id, c.spec.id, s};
      });
      return out;
    });
    write_text(out_dir / ("metrics_" + kname + ".csv"), format_metrics_csv(rows));

    // select
    std::vector<std::pair<std::string, MetricSample>> grouped;
    for (const auto& r : rows) grouped.emplace_back(r.model_id, r.sample);
    std::vector<ModelSpec> specs;
    for (const auto& c : models) specs.push_back(c.spec);
    const auto records = group_records(grouped, specs);
    const nlohmann::json selection =
        stage("select/" + kname, [&] { return selection_json(records); });
    write_json(out_dir / ("selection_" + kname + ".json"), selection);
    write_text(out_dir / ("pareto_" + kname + ".svg"), pareto_svg(records));
    section["models"] = nlohmann::json::object();
    for (const auto& r : records) section["models"][r.spec.id] = medians_json(r);
    section["frontier"] = selection["frontier"];
    section["best"] = selection["best"];

    if (selection["best"].is_null()) {
      spdlog::warn("e2e: no selectable {} model; skipping final evaluation and heat map",
                   kname);
      section["final"] = nullptr;
      section["heatmap"] = nullptr;
      report[kname] = section;
      continue;
    }
    const std::string best_id = selection["best"].get<std::string>();
    const auto best_it = std::find_if(
        models.begin(), models.end(),
        [&](const Candidate& c) { return c.spec.id == best_id; });
    const Candidate& best = *best_it;
    const auto best_index = static_cast<std::size_t>(best_it - models.begin());

    // final evaluation of the chosen model on held-out modules
    std::vector<std::pair<std::string, BinaryMask>> population;
    for (std::size_t i = 0; i < test_ids.size(); ++i) {
      population.emplace_back(test_ids[i],
                              std::move(test_preds[best_index * test_ids.size() + i]));
    }
    test_preds.clear();
    section["final"] = stage("final/" + kname, [&] {
      const auto final_set = load_split(manifest, kind, Split::final, workers);
      ModelRecord rec;
      rec.spec = best.spec;
      rec.samples.resize(final_set.size());
      std::vector<BinaryMask> preds(final_set.size());
      parallel_for(final_set.size(), workers, [&](std::size_t i) {
        const auto seg = reference_segmenter(best.options, best.spec);
        preds[i] = segment_full(final_set[i].image, *seg);
        rec.samples[i] = evaluate(preds[i], final_set[i].truth);
        rec.samples[i].image_id = final_set[i].id;
        save_mask(out_dir / "predictions" / best_id / (final_set[i].id + ".png"),
                  preds[i]);
      });
      for (std::size_t i = 0; i < final_set.size(); ++i) {
        population.emplace_back(final_set[i].id, std::move(preds[i]));
      }
      rec.update_medians();
      return medians_json(rec);
    });

    // heat map over the whole population
    section["heatmap"] = stage("heatmap/" + kname, [&] {
      const auto train = load_split(manifest, kind, Split::train, workers);
      std::vector<BinaryMask> preds(train.size());
      parallel_for(train.size(), workers, [&](std::size_t i) {
        const auto seg = reference_segmenter(best.options, best.spec);
        preds[i] = segment_full(train[i].image, *seg);
      });
      for (std::size_t i = 0; i < train.size(); ++i) {
        population.emplace_back(train[i].id, std::move(preds[i]));
      }
      std::sort(population.begin(), population.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      HeatMap map(size_of(population.front().second));
      nlohmann::json components = nlohmann::json::object();
      for (const auto& [id, pred] : population) {
        map.add(pred);
        components[id] = label_components(pred).count;
      }
      const HeatRender r = render_heatmap(map, config.heat_scale, config.heat_clip);
      save_image(out_dir / ("heatmap_" + kname + ".png"), r.image, 8);
      write_json(out_dir / ("heatmap_" + kname + "_legend.json"), r.legend.to_json());
      return nlohmann::json{{"n_images", map.n_images()},
                            {"max_count", map.counts().maxCoeff()},
                            {"nonzero_pixels", (map.counts() > 0).count()},
                            {"white_level", r.legend.white_level},
                            {"components", components}};
    });
    report[kname] = section;
  }

  write_json(out_dir / "report.json", report);
  return report;
}

}  // namespace elseg::app
