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
#include <iostream>
#include <map>
#include <mutex>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "elseg/app.hpp"
#include "elseg/io.hpp"
#include "elseg/segmenter.hpp"
#include "elseg/tiling.hpp"

namespace elseg::app {
namespace fs = std::filesystem;
namespace {

struct Globals {
  std::string log_level = "info";
  int workers = 0;
};

std::vector<fs::path> png_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw IoError("not a directory: " + dir.string());
  }
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ModelSpec> model_list(const std::string& path) {
  return path.empty() ? standard_model_zoo() : load_model_specs(path);
}

const ModelSpec& find_model(const std::vector<ModelSpec>& specs,
                            const std::string& id) {
  const auto it = std::find_if(specs.begin(), specs.end(),
                               [&](const ModelSpec& s) { return s.id == id; });
  if (it == specs.end()) throw UsageError("unknown model id '" + id + "'");
  return *it;
}

DefectKind kind_flag(const std::string& text) {
  try {
    return parse_defect_kind(text);
  } catch (const std::exception&) {
    throw UsageError("--kind must be 'shunt' or 'droplet', got '" + text + "'");
  }
}

Connectivity connectivity_flag(int c) {
  if (c != 4 && c != 8) throw UsageError("--connectivity must be 4 or 8");
  return static_cast<Connectivity>(c);
}

// synth ---------------------------------------------------------------------

struct SynthArgs {
  std::string spec;
  std::string prior;
  std::string out;
  int count = 10;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double train = 0.6;
  double test = 0.2;
  double min_separation = 40.0;
};

int cmd_synth(const SynthArgs& a, const Globals& g) {
  if (a.count < 1) throw UsageError("--count must be at least 1");
  if (a.train < 0 || a.test < 0 || a.train + a.test > 1) {
    throw UsageError("--train and --test must be non-negative with sum <= 1");
  }
  SynthSpec tmpl = a.spec.empty() ? E2EConfig::default_demo_template()
                                  : synth_spec_from_json(read_json(a.spec));
  if (a.seed_set) tmpl.seed = a.seed;
  std::optional<DensityPrior> prior;
  if (!a.prior.empty()) prior = load_image(a.prior);
  const auto items = plan_corpus(
      tmpl, CorpusOptions{a.count, a.train, a.test, a.min_separation}, prior);
  parallel_for(items.size(), g.workers,
               [&](std::size_t i) { write_corpus_item(items[i], a.out); });
  write_manifest(fs::path(a.out) / "manifest.json", corpus_manifest(items));
  spdlog::info("wrote {} modules to {}", items.size(), a.out);
  return 0;
}

// augment -------------------------------------------------------------------

struct AugmentArgs {
  std::string manifest;
  std::string config;
  std::string out;
  std::string kind = "shunt";
  bool plan_only = false;
};

int cmd_augment(const AugmentArgs& a, const Globals&) {
  const DefectKind kind = kind_flag(a.kind);
  const AugmentConfig cfg = a.config.empty()
                                ? AugmentConfig{}
                                : augment_config_from_json(read_json(a.config));
  const DatasetManifest m = parse_manifest(a.manifest);
  const SourceSet sources = SourceSet::from_manifest(m, kind);
  const fs::path out(a.out);
  std::vector<std::string> lines;
  if (a.plan_only) {
    for (const auto& p : plan_patches(sources, cfg)) lines.push_back(to_json(p).dump());
  } else {
    fs::create_directories(out / "images");
    fs::create_directories(out / "masks");
    std::map<std::size_t, std::string> by_rank;
    generate_patches(sources, cfg, [&](std::size_t rank, const PatchPair& p) {
      const std::string name = fmt::format("{:06d}.png", rank);
      save_image(out / "images" / name, p.image);
      save_mask(out / "masks" / name, p.mask);
      nlohmann::json j = to_json(p.provenance);
      j["rank"] = rank;
      by_rank[rank] = j.dump();
    });
    for (auto& [rank, line] : by_rank) lines.push_back(std::move(line));
  }
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  write_text(out / "provenance.jsonl", text);
  std::cout << lines.size() << "\n";
  spdlog::info("{} {} patches from {} sources", lines.size(), a.kind,
               sources.count);
  return 0;
}

// infer ---------------------------------------------------------------------

struct InferArgs {
  std::string image;
  std::string model;
  std::string models;
  std::string predictions;
  std::string reference;
  std::string export_patches;
  std::string out;
  double threshold_sigma = 3.0;
  int patch_size = 256;
};

int cmd_infer(const InferArgs& a, const Globals&) {
  const int modes = !a.predictions.empty() + !a.reference.empty() +
                    !a.export_patches.empty();
  if (modes != 1) {
    throw UsageError(
        "exactly one of --predictions, --reference or --export-patches is required");
  }
  if (a.out.empty() && a.export_patches.empty()) {
    throw UsageError("--out is required");
  }
  std::unique_ptr<Segmenter> seg;
  ModelSpec spec;
  if (!a.reference.empty()) {
    ReferenceOptions opt;
    opt.kind = kind_flag(a.reference);
    opt.threshold_sigma = a.threshold_sigma;
    spec.id = a.model.empty() ? "reference-" + a.reference : a.model;
    spec.input_size = a.patch_size;
    validate_spec(spec);
    seg = reference_segmenter(opt, spec);
  } else {
    if (a.model.empty()) throw UsageError("--model is required");
    spec = find_model(model_list(a.models), a.model);
  }
  const GrayImage image = load_image(a.image);
  const TilingPlan tiles = plan(size_of(image), spec.input_size);
  if (!a.export_patches.empty()) {
    const fs::path dir(a.export_patches);
    for (Point o : tiles.offsets()) {
      const GrayImage patch =
          image.block(o.y, o.x, tiles.patch_size, tiles.patch_size);
      save_image(dir / (patch_key(patch) + ".png"), patch);
    }
    spdlog::info("exported {} patches to {}", tiles.offsets().size(),
                 dir.string());
    return 0;
  }
  if (!seg) seg = external_segmenter(spec, a.predictions);
  save_mask(a.out, segment_full(image, *seg, tiles));
  return 0;
}

// eval ----------------------------------------------------------------------

struct EvalArgs {
  std::string manifest;
  std::string pred = "predictions";
  std::string out = "metrics.csv";
  std::string kind = "shunt";
  std::string split = "test";
  int connectivity = 8;
};

int cmd_eval(const EvalArgs& a, const Globals& g) {
  const DefectKind kind = kind_flag(a.kind);
  Split split;
  try {
    split = parse_split(a.split);
  } catch (const std::exception&) {
    throw UsageError("--split must be train, test or final");
  }
  const Connectivity conn = connectivity_flag(a.connectivity);
  const DatasetManifest m = parse_manifest(a.manifest);
  const auto entries = m.select(kind, split);
  for (const auto& e : entries) {
    if (!e.mask) throw FormatError("entry without mask: " + e.image.string());
  }
  const fs::path pred(a.pred);
  if (!fs::is_directory(pred)) throw IoError("not a directory: " + pred.string());
  std::vector<std::string> models;
  for (const auto& e : fs::directory_iterator(pred)) {
    if (e.is_directory()) models.push_back(e.path().filename().string());
  }
  std::sort(models.begin(), models.end());
  if (models.empty()) throw IoError("no model directories under " + pred.string());

  std::vector<BinaryMask> truth(entries.size());
  parallel_for(entries.size(), g.workers, [&](std::size_t i) {
    truth[i] = load_mask(m.resolve(*entries[i].mask));
  });
  std::vector<MetricRow> rows(models.size() * entries.size());
  parallel_for(rows.size(), g.workers, [&](std::size_t idx) {
    const std::size_t mi = idx / entries.size();
    const std::size_t ei = idx % entries.size();
    const std::string id = entries[ei].image_id();
    const BinaryMask p = load_mask(pred / models[mi] / (id + ".png"));
    MetricSample s = evaluate(p, truth[ei], conn);
    s.image_id = id;
    rows[idx] = {id, models[mi], s};
  });
  write_text(a.out, format_metrics_csv(rows));
  spdlog::info("{} rows for {} models written to {}", rows.size(),
               models.size(), a.out);
  return 0;
}

// baseline ------------------------------------------------------------------

struct BaselineArgs {
  std::string first;
  std::string second;
  std::string out = "baseline.json";
  int connectivity = 8;
};

int cmd_baseline(const BaselineArgs& a, const Globals& g) {
  const Connectivity conn = connectivity_flag(a.connectivity);
  const auto files = png_files(a.first);
  std::vector<std::pair<BinaryMask, BinaryMask>> pairs(files.size());
  parallel_for(files.size(), g.workers, [&](std::size_t i) {
    pairs[i] = {load_mask(files[i]),
                load_mask(fs::path(a.second) / files[i].filename())};
  });
  const Baseline b = estimate_baseline(pairs, conn);
  write_json(a.out, {{"precision", b.precision},
                     {"recall", b.recall},
                     {"jaccard", b.jaccard},
                     {"images", pairs.size()}});
  return 0;
}

// select --------------------------------------------------------------------

struct SelectArgs {
  std::string metrics;
  std::string out = "selection.json";
  std::string plot;
  std::string baseline;
  std::string models;
};

int cmd_select(const SelectArgs& a, const Globals&) {
  const auto rows = read_metrics_csv(a.metrics);
  std::optional<Baseline> base;
  if (!a.baseline.empty()) {
    const auto j = read_json(a.baseline);
    try {
      base = Baseline{j.at("precision").get<double>(), j.at("recall").get<double>(),
                      j.at("jaccard").get<double>()};
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(a.baseline + ": " + e.what());
    }
  }
  std::vector<std::pair<std::string, MetricSample>> grouped;
  for (const auto& r : rows) {
    grouped.emplace_back(r.model_id, base ? normalize(r.sample, *base) : r.sample);
  }
  std::vector<ModelSpec> specs;
  if (!a.models.empty()) specs = load_model_specs(a.models);
  const auto records = group_records(grouped, specs);
  const auto selection = selection_json(records);
  write_json(a.out, selection);
  if (!a.plot.empty()) write_text(a.plot, pareto_svg(records));
  spdlog::info("frontier of {} models, best {}", selection["frontier"].size(),
               selection["best"].dump());
  return 0;
}

// heatmap / correlate -------------------------------------------------------

struct HeatmapArgs {
  std::string masks;
  std::string scale = "log";
  double clip = 1.0;
  std::string out = "heatmap.png";
  std::string legend;
};

HeatMap accumulate_dir(const std::string& dir, int workers,
                       std::vector<std::pair<std::string, double>>* counts) {
  const auto files = png_files(dir);
  if (files.empty()) throw IoError("no PNG masks in " + dir);
  const BinaryMask first = load_mask(files.front());
  HeatMap map(size_of(first));
  std::mutex lock;
  if (counts) counts->resize(files.size());
  parallel_for(files.size(), workers, [&](std::size_t i) {
    const BinaryMask mask = i == 0 ? first : load_mask(files[i]);
    if (counts) {
      (*counts)[i] = {files[i].stem().string(),
                      static_cast<double>(label_components(mask).count)};
    }
    std::lock_guard guard(lock);
    map.add(mask);
  });
  return map;
}

int cmd_heatmap(const HeatmapArgs& a, const Globals& g) {
  if (a.scale != "log" && a.scale != "linear") {
    throw UsageError("--scale must be 'log' or 'linear'");
  }
  if (a.clip < 0 || a.clip >= 100) throw UsageError("--clip must be in [0, 100)");
  const HeatMap map = accumulate_dir(a.masks, g.workers, nullptr);
  const HeatRender r = render_heatmap(
      map, a.scale == "log" ? HeatScale::log : HeatScale::linear, a.clip);
  save_image(a.out, r.image, 8);
  if (!a.legend.empty()) write_json(a.legend, r.legend.to_json());
  return 0;
}

struct CorrelateArgs {
  std::string masks;
  std::string performance;
  std::string key = "isc_slope";
  std::string out = "scatter.csv";
};

int cmd_correlate(const CorrelateArgs& a, const Globals& g) {
  std::vector<std::pair<std::string, double>> counts;
  accumulate_dir(a.masks, g.workers, &counts);
  const std::string table = read_text(a.performance);
  const auto perf = parse_performance_csv(table);
  const Correlation c = correlate(counts, perf, a.key);

  const auto cells = parse_csv(table);
  std::vector<std::size_t> extra;
  for (std::size_t k = 1; k < cells.front().size(); ++k) {
    if (cells.front()[k] != a.key) extra.push_back(k);
  }
  std::map<std::string, std::size_t> line_of;
  for (std::size_t i = 1; i < cells.size(); ++i) line_of[cells[i][0]] = i;
  std::string text = "image_id,count," + a.key;
  for (std::size_t k : extra) text += "," + cells.front()[k];
  text += "\n";
  for (const auto& row : c.scatter) {
    text += fmt::format("{},{},{}", row.image_id, row.count, row.performance);
    for (std::size_t k : extra) text += "," + cells[line_of.at(row.image_id)][k];
    text += "\n";
  }
  write_text(a.out, text);
  std::cout << fmt::format("pearson_r={}\n", c.pearson_r);
  return 0;
}

// models / run --------------------------------------------------------------

int cmd_models(const std::string& out) {
  const auto zoo = standard_model_zoo();
  if (out.empty()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : zoo) j.push_back(to_json(s));
    std::cout << j.dump(2) << "\n";
  } else {
    write_model_specs(out, zoo);
  }
  return 0;
}

int cmd_run(const std::string& config, const std::string& out,
            const Globals& g) {
  const E2EConfig cfg =
      config.empty() ? E2EConfig{} : e2e_config_from_json(read_json(config));
  const auto report = run_e2e(cfg, out, g.workers);
  for (const char* kind : {"shunt", "droplet"}) {
    spdlog::info("{}: best {}", kind, report[kind]["best"].dump());
  }
  return 0;
}

void setup_logging(const std::string& level) {
  spdlog::set_default_logger(std::make_shared<spdlog::logger>(
      "elseg", std::make_shared<spdlog::sinks::stderr_color_sink_mt>()));
  const auto lvl = spdlog::level::from_str(level);
  if (lvl == spdlog::level::off && level != "off") {
    throw UsageError("unknown --log-level '" + level + "'");
  }
  spdlog::set_level(lvl);
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Defect segmentation evaluation for EL images of thin-film modules",
               "elseg"};
  app.set_version_flag("--version", fmt::format("elseg {} (format version {})",
                                                kVersion, kFormatVersion));
  app.require_subcommand(1);
  Globals g;
  app.add_option("--log-level", g.log_level,
                 "trace, debug, info, warn, error or off");
  app.add_option("--workers", g.workers, "worker threads, 0 for all cores")
      ->check(CLI::NonNegativeNumber);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "render a synthetic module corpus");
  s->add_option("--spec", synth.spec, "SynthSpec JSON template");
  s->add_option("--count", synth.count, "number of modules");
  s->add_option("--out", synth.out, "output directory")->required();
  s->add_option("--prior", synth.prior, "defect position prior (PNG)");
  s->add_option("--seed", synth.seed, "overrides the template seed")
      ->each([&](const std::string&) { synth.seed_set = true; });
  s->add_option("--train", synth.train, "train fraction");
  s->add_option("--test", synth.test, "test fraction");
  s->add_option("--min-separation", synth.min_separation,
                "minimum distance between defect centres");

  AugmentArgs aug;
  auto* a = app.add_subcommand("augment", "extract augmented training patches");
  a->add_option("--manifest", aug.manifest, "dataset manifest")->required();
  a->add_option("--config", aug.config, "augmentation config JSON");
  a->add_option("--out", aug.out, "output directory")->required();
  a->add_option("--kind", aug.kind, "shunt or droplet");
  a->add_flag("--plan-only", aug.plan_only, "write provenance without pixels");

  InferArgs inf;
  auto* i = app.add_subcommand("infer", "tiled segmentation of one module image");
  i->add_option("--image", inf.image, "module image")->required();
  i->add_option("--model", inf.model, "model id");
  i->add_option("--models", inf.models, "model list JSON (default: built-in zoo)");
  i->add_option("--predictions", inf.predictions,
                "directory of per-patch predictions <id>/<key>.png");
  i->add_option("--reference", inf.reference,
                "use the classical segmenter for shunt or droplet");
  i->add_option("--threshold-sigma", inf.threshold_sigma,
                "reference threshold in MAD units");
  i->add_option("--patch-size", inf.patch_size, "reference input size");
  i->add_option("--export-patches", inf.export_patches,
                "write the planned patches as <key>.png and exit");
  i->add_option("--out", inf.out, "output mask");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "score predictions against ground truth");
  e->add_option("--manifest", ev.manifest, "dataset manifest")->required();
  e->add_option("--pred", ev.pred, "directory of <model_id>/<image_id>.png");
  e->add_option("--out", ev.out, "metrics CSV");
  e->add_option("--kind", ev.kind, "shunt or droplet");
  e->add_option("--split", ev.split, "train, test or final");
  e->add_option("--connectivity", ev.connectivity, "4 or 8");

  BaselineArgs bl;
  auto* b = app.add_subcommand("baseline", "estimate the human baseline");
  b->add_option("--first", bl.first, "first annotation directory")->required();
  b->add_option("--second", bl.second, "second annotation directory")->required();
  b->add_option("--out", bl.out, "baseline JSON");
  b->add_option("--connectivity", bl.connectivity, "4 or 8");

  SelectArgs sel;
  auto* se = app.add_subcommand("select", "Pareto model selection");
  se->add_option("--metrics", sel.metrics, "metrics CSV")->required();
  se->add_option("--out", sel.out, "selection JSON");
  se->add_option("--plot", sel.plot, "Pareto scatter SVG");
  se->add_option("--baseline", sel.baseline, "normalise by this baseline JSON");
  se->add_option("--models", sel.models, "model list JSON");

  HeatmapArgs hm;
  auto* h = app.add_subcommand("heatmap", "population defect heat map");
  h->add_option("--masks", hm.masks, "directory of masks")->required();
  h->add_option("--scale", hm.scale, "log or linear");
  h->add_option("--clip", hm.clip, "saturated percentile");
  h->add_option("--out", hm.out, "output PNG");
  h->add_option("--legend", hm.legend, "legend JSON");

  CorrelateArgs co;
  auto* c = app.add_subcommand("correlate", "defect count against performance");
  c->add_option("--masks", co.masks, "directory of masks")->required();
  c->add_option("--performance", co.performance, "performance CSV")->required();
  c->add_option("--key", co.key, "performance column");
  c->add_option("--out", co.out, "scatter CSV");

  std::string models_out;
  auto* mo = app.add_subcommand("models", "list the candidate model zoo");
  mo->add_option("--out", models_out, "write JSON here instead of stdout");

  std::string run_config;
  std::string run_out = "elseg-run";
  auto* r = app.add_subcommand("run", "end-to-end synthetic experiment");
  r->add_option("--config", run_config, "run config JSON");
  r->add_option("--out", run_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 1;
  }

  try {
    setup_logging(g.log_level);
    g.workers = resolve_workers(g.workers);
    if (s->parsed()) return cmd_synth(synth, g);
    if (a->parsed()) return cmd_augment(aug, g);
    if (i->parsed()) return cmd_infer(inf, g);
    if (e->parsed()) return cmd_eval(ev, g);
    if (b->parsed()) return cmd_baseline(bl, g);
    if (se->parsed()) return cmd_select(sel, g);
    if (h->parsed()) return cmd_heatmap(hm, g);
    if (c->parsed()) return cmd_correlate(co, g);
    if (mo->parsed()) return cmd_models(models_out);
    return cmd_run(run_config, run_out, g);
  } catch (const UsageError& err) {
    std::cerr << "elseg: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "elseg: " << err.what() << "\n";
    return 2;
  }
}

}  // namespace elseg::app
