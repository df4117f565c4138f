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

#ifndef ENAET_EXPERIMENT_HPP
#define ENAET_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "enaet/config.hpp"
#include "enaet/data.hpp"
#include "enaet/trainer.hpp"

namespace enaet {

struct Ablation {
  bool no_aet = false;
  bool no_cl = false;
  bool ssl_only = false;
  std::optional<Family> only_family;

  bool any() const { return no_aet || no_cl || ssl_only || only_family.has_value(); }
};

/// Throws std::invalid_argument for contradictory switches.
void validate(const Ablation& a);
/// Zeroes the weights an ablation removes. SSL-only also skips the
/// regularizer branch entirely.
void apply_ablation(TrainConfig& cfg, const Ablation& a);

struct AblationRow {
  std::string label;
  std::string slug;
  Ablation ablation;
};

/// The nine method rows of the ablation table, in table order.
const std::vector<AblationRow>& ablation_rows();

/// "N" -> N consecutive seeds starting at `first`; "a,b,c" -> that list.
std::vector<std::uint64_t> parse_seeds(std::string_view text, std::uint64_t first = 0);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for one value
};
MeanStd mean_std(std::span<const double> values);
double standard_error(std::span<const double> values);

struct SeedResult {
  std::uint64_t seed = 0;
  double teacher_error_last_k = 1.0;
  double final_teacher_error = 1.0;
  double final_student_error = 1.0;
  int epochs_completed = 0;
};

struct ExperimentSummary {
  std::string name;
  std::vector<SeedResult> seeds;

  std::vector<double> last_k_errors() const;
  std::vector<double> final_teacher_errors() const;
  /// "name: teacher error (last K) 0.1234 ± 0.0100 over 4 seeds".
  std::string summary_line() const;
  std::string to_json() const;
};

struct RunControl {
  bool resume = false;  // continue from seed_<s>/last.ckpt when present
  std::optional<int> stop_after_epoch;
};

/// Trains one run per seed. The labeled split is drawn with the run seed.
/// Each run writes to out_dir / "seed_<s>" unless out_dir is empty.
ExperimentSummary run_experiment(const std::string& name, const TrainConfig& cfg,
                                 const FullDataset& full, std::span<const std::uint64_t> seeds,
                                 const std::filesystem::path& out_dir,
                                 const std::function<void(const std::string&)>& progress = {},
                                 const RunControl& control = {});

/// method,mean_error,std,sem,n_seeds,per_seed
std::string ablation_csv(std::span<const ExperimentSummary> rows);

/// defaults < config file < flag overrides. Validates the result.
TrainConfig resolve_config(const std::optional<std::filesystem::path>& config_file,
                           const ConfigMap& flag_overrides);

/// Split used by a run with this config.
DatasetSplit split_for_run(const TrainConfig& cfg, const FullDataset& full);

/// Rebuilds the model of a run from its config and a checkpoint.
ModelState load_model(const TrainConfig& cfg, const FullDataset& full,
                      const std::filesystem::path& checkpoint);

}  // namespace enaet

#endif  // ENAET_EXPERIMENT_HPP
