// Copyright 2026 The enaet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line entry point: train, eval, ablate, gen-data, dump-transforms, plot.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "enaet/config.hpp"
#include "enaet/data.hpp"
#include "enaet/experiment.hpp"
#include "enaet/plot.hpp"
#include "enaet/png_io.hpp"
#include "enaet/trainer.hpp"
#include "enaet/transforms.hpp"

namespace {

using namespace enaet;

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunFlags {
  std::string config;
  std::string dataset;
  std::string seeds = "1";
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::string out;
  std::vector<std::string> sets;
  bool no_aet = false;
  bool no_cl = false;
  bool ssl_only = false;
  std::string only_family;
  bool resume = false;
  std::optional<int> stop_after_epoch;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool ablation_switches) {
  cmd->add_option("--config", f.config, "Config file (key = value)");
  cmd->add_option("--dataset", f.dataset, "Dataset directory")->required();
  cmd->add_option("--seeds", f.seeds, "Seed count N or comma-separated list");
  cmd->add_option("--epochs", f.epochs, "Override epochs");
  cmd->add_option("--batch-size", f.batch_size, "Override batch_size");
  cmd->add_option("--out", f.out, "Output directory")->required();
  cmd->add_option("--set", f.sets, "Extra override key=value (repeatable)");
  cmd->add_flag("--resume", f.resume, "Continue each run from its last.ckpt when present");
  cmd->add_option("--stop-after-epoch", f.stop_after_epoch, "Stop (resumably) after N epochs")
      ->check(CLI::PositiveNumber);
  if (ablation_switches) {
    cmd->add_flag("--no-aet", f.no_aet, "Zero every AET weight");
    cmd->add_flag("--no-cl", f.no_cl, "Zero the consistency weight");
    cmd->add_flag("--ssl-only", f.ssl_only, "Plain MixMatch baseline");
    cmd->add_option("--only-family", f.only_family, "Keep a single AET family")
        ->check(CLI::IsMember({"proj", "affine", "sim", "euc", "ccbs"}));
  }
}

TrainConfig resolve(const RunFlags& f) {
  ConfigMap overrides;
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    overrides[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (f.epochs) overrides["epochs"] = std::to_string(*f.epochs);
  if (f.batch_size) overrides["batch_size"] = std::to_string(*f.batch_size);
  std::optional<std::filesystem::path> file;
  if (!f.config.empty()) file = f.config;
  try {
    return resolve_config(file, overrides);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

Ablation ablation_from(const RunFlags& f) {
  Ablation a;
  a.no_aet = f.no_aet;
  a.no_cl = f.no_cl;
  a.ssl_only = f.ssl_only;
  if (!f.only_family.empty()) a.only_family = parse_family(f.only_family);
  try {
    validate(a);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return a;
}

std::vector<std::uint64_t> seeds_from(const RunFlags& f, const TrainConfig& cfg) {
  try {
    return parse_seeds(f.seeds, cfg.seed);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

FullDataset load_or_fail(const std::string& path) {
  if (!std::filesystem::is_directory(path))
    throw std::runtime_error("dataset directory not found: " + path);
  return load_dataset(path);
}

void log_line(const std::string& s) {
  std::cout << s << std::endl;
}

int cmd_train(const RunFlags& f) {
  TrainConfig cfg = resolve(f);
  apply_ablation(cfg, ablation_from(f));
  const auto seeds = seeds_from(f, cfg);
  const FullDataset full = load_or_fail(f.dataset);
  const std::filesystem::path out = f.out;
  std::filesystem::create_directories(out);
  std::ofstream(out / "config.cfg") << to_config_text(cfg);
  const ExperimentSummary summary =
      run_experiment("train", cfg, full, seeds, out, log_line, {f.resume, f.stop_after_epoch});
  std::cout << summary.summary_line() << std::endl;
  return 0;
}

int cmd_ablate(const RunFlags& f, const std::vector<std::string>& only_rows) {
  const TrainConfig base = resolve(f);
  const auto seeds = seeds_from(f, base);
  for (const auto& slug : only_rows) {
    bool known = false;
    for (const auto& row : ablation_rows()) known = known || row.slug == slug;
    if (!known) throw UsageError("unknown ablation row '" + slug + "'");
  }
  const FullDataset full = load_or_fail(f.dataset);
  const std::filesystem::path out = f.out;
  std::filesystem::create_directories(out);
  std::vector<ExperimentSummary> rows;
  for (const auto& row : ablation_rows()) {
    if (!only_rows.empty() &&
        std::find(only_rows.begin(), only_rows.end(), row.slug) == only_rows.end())
      continue;
    TrainConfig cfg = base;
    apply_ablation(cfg, row.ablation);
    rows.push_back(run_experiment(row.label, cfg, full, seeds, out / row.slug, log_line,
                                  {f.resume, f.stop_after_epoch}));
    std::cout << rows.back().summary_line() << std::endl;
    std::ofstream(out / "ablation.csv") << ablation_csv(rows);
  }
  std::cout << ablation_csv(rows);
  return 0;
}

int cmd_eval(const std::string& run_dir, std::string config, std::string checkpoint,
             const std::string& dataset) {
  if (config.empty() && run_dir.empty()) throw UsageError("eval needs --run or --config");
  if (config.empty()) config = (std::filesystem::path(run_dir) / "config.cfg").string();
  if (checkpoint.empty()) {
    if (run_dir.empty()) throw UsageError("eval needs --checkpoint when --run is not given");
    checkpoint = (std::filesystem::path(run_dir) / "last.ckpt").string();
  }
  TrainConfig cfg;
  try {
    cfg = resolve_config(std::filesystem::path(config), {});
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const FullDataset full = load_or_fail(dataset);
  ModelState state = load_model(cfg, full, checkpoint);
  const double teacher = evaluate(state, full.test, true);
  const double stud = evaluate(state, full.test, false);
  std::printf("step %lld teacher_error %.4f student_error %.4f\n",
              static_cast<long long>(state.step), teacher, stud);
  return 0;
}

int cmd_gen_data(const std::string& out, SyntheticConfig sc, std::uint64_t seed) {
  sc.labels_per_class = std::min(sc.labels_per_class, sc.train_per_class);
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  Rng rng = Rng::derive(seed, 0);
  const FullDataset full = make_synthetic_full(sc, rng);
  save_dataset(out, full);
  std::printf("wrote %zu train and %zu test images to %s\n", full.train.size(), full.test.size(),
              out.c_str());
  return 0;
}

int cmd_dump_transforms(const std::string& dataset, const std::string& out, int count,
                        std::uint64_t seed, int image_size) {
  if (count <= 0) throw UsageError("--count must be positive");
  std::vector<Image> sources;
  Rng rng = Rng::derive(seed, 7);
  if (!dataset.empty()) {
    const FullDataset full = load_or_fail(dataset);
    for (int i = 0; i < count && i < static_cast<int>(full.train.size()); ++i)
      sources.push_back(full.train[i].image);
  } else {
    SyntheticConfig sc;
    sc.image_size = image_size;
    sc.train_per_class = (count + sc.num_classes - 1) / sc.num_classes;
    sc.test_per_class = 1;
    sc.labels_per_class = 1;
    const FullDataset full = make_synthetic_full(sc, rng);
    for (int i = 0; i < count; ++i) sources.push_back(full.train[i].image);
  }
  if (sources.empty()) throw std::runtime_error("no source images");

  const int h = sources[0].height, w = sources[0].width, c = sources[0].channels;
  constexpr int kPad = 2;
  const int cols = 1 + kNumFamilies;
  const int rows = static_cast<int>(sources.size());
  Image grid(rows * (h + kPad) + kPad, cols * (w + kPad) + kPad, c);
  std::fill(grid.pixels.begin(), grid.pixels.end(), 1.0);
  const auto blit = [&](const Image& img, int r, int col) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < c; ++ch)
          grid.at(kPad + r * (h + kPad) + y, kPad + col * (w + kPad) + x, ch) = img.at(y, x, ch);
  };

  nlohmann::ordered_json sidecar = nlohmann::ordered_json::array();
  for (int r = 0; r < rows; ++r) {
    blit(sources[r], r, 0);
    for (Family f : kAllFamilies) {
      nlohmann::ordered_json entry;
      entry["row"] = r;
      entry["column"] = 1 + static_cast<int>(f);
      entry["family"] = family_name(f);
      if (f == Family::Ccbs) {
        const PhotometricTransform t = sample_ccbs(rng);
        blit(apply_ccbs(sources[r], t), r, 1 + static_cast<int>(f));
        entry["params"] = {t.color, t.contrast, t.brightness, t.sharpness};
        entry["target"] = target_vector(t).values;
      } else {
        const SpatialTransform t = sample_spatial(to_spatial(f), rng);
        blit(warp(sources[r], t), r, 1 + static_cast<int>(f));
        entry["params"] = t.params;
        entry["target"] = target_vector(t).values;
      }
      sidecar.push_back(entry);
    }
  }
  std::filesystem::create_directories(out);
  write_png(std::filesystem::path(out) / "transforms.png", grid);
  std::ofstream(std::filesystem::path(out) / "transforms.json") << sidecar.dump(2) << '\n';
  std::printf("wrote %d rows x %d columns (original, proj, affine, sim, euc, ccbs) to %s\n", rows,
              cols, out.c_str());
  return 0;
}

int cmd_plot(const std::string& metrics, std::string out) {
  if (out.empty()) out = std::filesystem::path(metrics).parent_path().string();
  if (out.empty()) out = ".";
  PlotFiles files;
  try {
    files = plot_metrics(metrics, out);
  } catch (const MetricsParseError& e) {
    std::cerr << "error: " << metrics << ": " << e.what() << "\n";
    return kRuntimeError;
  }
  if (files.empty) std::cerr << "warning: " << metrics << " has no records; plots are empty\n";
  std::printf("wrote %s and %s\n", files.losses.string().c_str(), files.errors.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised training with an ensemble of auto-encoding transformations"};
  app.require_subcommand(1);

  RunFlags train_flags;
  auto* train = app.add_subcommand("train", "Train over one or more seeds");
  add_run_flags(train, train_flags, true);

  RunFlags ablate_flags;
  std::vector<std::string> only_rows;
  auto* ablate = app.add_subcommand("ablate", "Run the ablation matrix");
  add_run_flags(ablate, ablate_flags, false);
  ablate->add_option("--rows", only_rows, "Subset of rows by slug")->delimiter(',');

  std::string run_dir, eval_config, eval_ckpt, eval_dataset;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  eval->add_option("--run", run_dir, "Run directory (config.cfg + last.ckpt)");
  eval->add_option("--config", eval_config, "Config file of the run");
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file");
  eval->add_option("--dataset", eval_dataset, "Dataset directory")->required();

  std::string gen_out;
  SyntheticConfig sc;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic shape dataset");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--classes", sc.num_classes, "Number of shape classes (2-6)");
  gen->add_option("--image-size", sc.image_size, "Image side in pixels");
  gen->add_option("--channels", sc.channels, "1 or 3");
  gen->add_option("--train-per-class", sc.train_per_class);
  gen->add_option("--test-per-class", sc.test_per_class);
  gen->add_option("--seed", gen_seed);

  std::string dump_dataset, dump_out;
  int dump_count = 8, dump_size = 32;
  std::uint64_t dump_seed = 0;
  auto* dump = app.add_subcommand("dump-transforms", "Grid of sampled transformations");
  dump->add_option("--dataset", dump_dataset, "Dataset directory (default: synthetic)");
  dump->add_option("--out", dump_out, "Output directory")->required();
  dump->add_option("--count", dump_count, "Number of source images");
  dump->add_option("--image-size", dump_size, "Synthetic image size");
  dump->add_option("--seed", dump_seed);

  std::string plot_metrics_path, plot_out;
  auto* plot = app.add_subcommand("plot", "Render loss and error curves from metrics JSONL");
  plot->add_option("metrics", plot_metrics_path, "metrics.jsonl")->required();
  plot->add_option("--out", plot_out, "Output directory (default: next to the metrics)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*train) return cmd_train(train_flags);
    if (*ablate) return cmd_ablate(ablate_flags, only_rows);
    if (*eval) return cmd_eval(run_dir, eval_config, eval_ckpt, eval_dataset);
    if (*gen) return cmd_gen_data(gen_out, sc, gen_seed);
    if (*dump) return cmd_dump_transforms(dump_dataset, dump_out, dump_count, dump_seed, dump_size);
    if (*plot) return cmd_plot(plot_metrics_path, plot_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
