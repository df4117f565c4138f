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

#include "enaet/experiment.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "enaet/checkpoint.hpp"

namespace enaet {

void validate(const Ablation& a) {
  if (a.ssl_only && (a.no_aet || a.no_cl || a.only_family))
    throw std::invalid_argument("--ssl-only cannot be combined with other ablation switches");
  if (a.only_family && a.no_aet)
    throw std::invalid_argument("--only-family needs the AET loss; drop --no-aet");
}

void apply_ablation(TrainConfig& cfg, const Ablation& a) {
  validate(a);
  if (a.ssl_only) {
    cfg.lambda_k.fill(0.0);
    cfg.gamma = 0.0;
    cfg.regularizers = false;
    return;
  }
  if (a.no_aet) cfg.lambda_k.fill(0.0);
  if (a.no_cl) cfg.gamma = 0.0;
  if (a.only_family) {
    for (Family f : kAllFamilies)
      if (f != *a.only_family) cfg.lambda_k[static_cast<int>(f)] = 0.0;
  }
}

const std::vector<AblationRow>& ablation_rows() {
  static const std::vector<AblationRow> rows = [] {
    std::vector<AblationRow> r;
    r.push_back({"EnAET", "full", {}});
    const std::pair<Family, const char*> singles[] = {
        {Family::Projective, "Only Projective Transformation"},
        {Family::Affine, "Only Affine Transformation"},
        {Family::Similarity, "Only Similarity Transformation"},
        {Family::Euclidean, "Only Euclidean Transformation"},
        {Family::Ccbs, "Only CCBS Transformation"},
    };
    for (const auto& [f, label] : singles) {
      Ablation a;
      a.only_family = f;
      r.push_back({label, "only_" + std::string(family_name(f)), a});
    }
    Ablation no_cl;
    no_cl.no_cl = true;
    r.push_back({"Remove CL loss", "no_cl", no_cl});
    Ablation no_aet;
    no_aet.no_aet = true;
    r.push_back({"Remove AET loss", "no_aet", no_aet});
    Ablation ssl;
    ssl.ssl_only = true;
    r.push_back({"Baseline: MixMatch", "ssl_only", ssl});
    return r;
  }();
  return rows;
}

std::vector<std::uint64_t> parse_seeds(std::string_view text, std::uint64_t first) {
  const auto parse_one = [](std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
      throw std::invalid_argument("bad seed '" + std::string(s) + "'");
    return v;
  };
  std::vector<std::uint64_t> out;
  if (text.find(',') == std::string_view::npos) {
    const std::uint64_t n = parse_one(text);
    if (n == 0) throw std::invalid_argument("--seeds needs at least one seed");
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(first + i);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    if (!item.empty()) out.push_back(parse_one(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("--seeds needs at least one seed");
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

double standard_error(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  return mean_std(values).std / std::sqrt(static_cast<double>(values.size()));
}

std::vector<double> ExperimentSummary::last_k_errors() const {
  std::vector<double> out;
  for (const auto& s : seeds) out.push_back(s.teacher_error_last_k);
  return out;
}

std::vector<double> ExperimentSummary::final_teacher_errors() const {
  std::vector<double> out;
  for (const auto& s : seeds) out.push_back(s.final_teacher_error);
  return out;
}

std::string ExperimentSummary::summary_line() const {
  const auto lk = last_k_errors();
  const auto fin = final_teacher_errors();
  const MeanStd a = mean_std(lk);
  const MeanStd b = mean_std(fin);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%s: teacher error (last K) %.4f ± %.4f, final %.4f ± %.4f over %zu seed%s",
                name.c_str(), a.mean, a.std, b.mean, b.std, seeds.size(),
                seeds.size() == 1 ? "" : "s");
  return buf;
}

std::string ExperimentSummary::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  nlohmann::ordered_json per_seed = nlohmann::ordered_json::array();
  for (const auto& s : seeds) {
    per_seed.push_back({{"seed", s.seed},
                        {"teacher_error_last_k", s.teacher_error_last_k},
                        {"final_teacher_error", s.final_teacher_error},
                        {"final_student_error", s.final_student_error},
                        {"epochs_completed", s.epochs_completed}});
  }
  j["seeds"] = per_seed;
  const auto lk = last_k_errors();
  const auto fin = final_teacher_errors();
  const MeanStd a = mean_std(lk);
  const MeanStd b = mean_std(fin);
  j["teacher_error_last_k"] = {{"mean", a.mean}, {"std", a.std}};
  j["final_teacher_error"] = {{"mean", b.mean}, {"std", b.std}};
  return j.dump(2);
}

TrainConfig resolve_config(const std::optional<std::filesystem::path>& config_file,
                           const ConfigMap& flag_overrides) {
  TrainConfig cfg;
  if (config_file) apply_config(cfg, read_config_file(*config_file));
  apply_config(cfg, flag_overrides);
  cfg.validate();
  return cfg;
}

DatasetSplit split_for_run(const TrainConfig& cfg, const FullDataset& full) {
  const int n = cfg.n_labels == 0 ? static_cast<int>(full.train.size()) : cfg.n_labels;
  return split_labels(full, n, cfg.seed);
}

ExperimentSummary run_experiment(const std::string& name, const TrainConfig& cfg,
                                 const FullDataset& full, std::span<const std::uint64_t> seeds,
                                 const std::filesystem::path& out_dir,
                                 const std::function<void(const std::string&)>& progress,
                                 const RunControl& control) {
  ExperimentSummary summary;
  summary.name = name;
  for (std::uint64_t seed : seeds) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = seed;
    const DatasetSplit split = split_for_run(run_cfg, full);
    TrainOptions opts;
    if (!out_dir.empty()) opts.out_dir = out_dir / ("seed_" + std::to_string(seed));
    if (control.resume && !opts.out_dir.empty() && std::filesystem::exists(opts.out_dir / "last.ckpt"))
      opts.resume_from = opts.out_dir / "last.ckpt";
    opts.stop_after_epoch = control.stop_after_epoch;
    const TrainResult r = train(run_cfg, split, opts);
    SeedResult s{seed, r.mean_teacher_error_last_k, r.final_teacher_error, r.final_student_error,
                 r.epochs_completed};
    summary.seeds.push_back(s);
    if (!opts.out_dir.empty()) {
      ExperimentSummary one;
      one.name = name;
      one.seeds.push_back(s);
      std::ofstream(opts.out_dir / "summary.json") << one.to_json() << '\n';
    }
    if (progress) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s seed %llu: teacher error %.4f (last K %.4f), student %.4f",
                    name.c_str(), static_cast<unsigned long long>(seed), s.final_teacher_error,
                    s.teacher_error_last_k, s.final_student_error);
      progress(buf);
    }
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream(out_dir / "summary.json") << summary.to_json() << '\n';
    std::ofstream(out_dir / "summary.txt") << summary.summary_line() << '\n';
  }
  return summary;
}

std::string ablation_csv(std::span<const ExperimentSummary> rows) {
  std::string out = "method,mean_error,std,sem,n_seeds,per_seed\n";
  char buf[64];
  for (const auto& row : rows) {
    const auto errs = row.last_k_errors();
    const MeanStd ms = mean_std(errs);
    out += row.name;
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%zu,", ms.mean, ms.std, standard_error(errs),
                  errs.size());
    out += buf;
    for (std::size_t i = 0; i < errs.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.6f", i ? ";" : "", errs[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

ModelState load_model(const TrainConfig& cfg, const FullDataset& full,
                      const std::filesystem::path& checkpoint) {
  if (full.train.empty()) throw std::invalid_argument("dataset has no training images");
  const Image& probe = full.train.front().image;
  const DatasetMetadata meta = channel_statistics(full.train);
  const ModelConfig mc = model_config_for(cfg, probe.height, probe.channels, full.num_classes,
                                          meta.channel_mean, meta.channel_std);
  Rng rng = Rng::derive(cfg.seed, 0);
  ModelState state = init_model(mc, rng);
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  if (ckpt.config_hash != config_hash(cfg))
    throw std::runtime_error("checkpoint " + checkpoint.string() +
                             " was written by a different configuration");
  restore_model(state, ckpt);
  return state;
}

}  // namespace enaet
