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

#ifndef ENAET_TRAINER_HPP
#define ENAET_TRAINER_HPP

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "enaet/config.hpp"
#include "enaet/data.hpp"
#include "enaet/losses.hpp"
#include "enaet/mixmatch.hpp"
#include "enaet/model.hpp"

namespace enaet {

double ramp_weight(std::int64_t step, double max_weight, std::int64_t ramp_steps);
/// Cosine decay from `initial` to `final_value` over `total_steps`.
double cosine_lr(std::int64_t step, std::int64_t total_steps, double initial, double final_value);

/// teacher = alpha * teacher + (1 - alpha) * student, elementwise.
void ema_update(Tensor& teacher, const Tensor& student, double alpha);
/// Applies ema_update to every teacher parameter and normalization buffer.
void ema_update(ModelState& state, double alpha);
/// alpha, or min(alpha, 1 - 1 / (step + 1)) with warm-up.
double effective_ema_alpha(std::int64_t step, double alpha, bool warmup);

void adam_update(const std::vector<NamedParam>& params, AdamState& state, std::int64_t t,
                 double lr, double beta1, double beta2, double eps);
void sgd_update(const std::vector<NamedParam>& params, SgdState& state, double lr,
                double momentum, double weight_decay);

/// Separate random streams so the MixMatch draws do not depend on whether
/// the transformation ensemble is sampled.
struct TrainerRngs {
  Rng data;
  Rng mixmatch;
  Rng transforms;

  static TrainerRngs from_seed(std::uint64_t seed);
};

/// Every random draw of one step, fixed before any loss is evaluated.
struct StepPlan {
  MixMatchOutput mixmatch;
  bool regularizers = false;
  /// Original images fed to the AET branch; the first `consistency_rows` are
  /// the unlabeled batch (consistency targets are their guessed labels).
  std::vector<Image> aet_sources;
  int consistency_rows = 0;
  std::array<std::vector<Image>, kNumFamilies> transformed;
  std::array<Tensor, kNumFamilies> aet_targets;
};

StepPlan plan_step(ModelState& state, std::span<const LabeledImage> labeled,
                   std::span<const Image> unlabeled, const TrainConfig& cfg, TrainerRngs& rngs);

struct LossGraph {
  Var total;
  LossBreakdown breakdown;
};

/// Builds the full objective for a fixed plan. Deterministic in the
/// parameters, so it doubles as the function under finite-difference checks.
LossGraph build_loss(ModelState& state, const StepPlan& plan, const LossWeights& weights,
                     Tape* tape);

LossWeights ramped_weights(const TrainConfig& cfg, std::int64_t step, std::int64_t ramp_steps);

struct MetricsRecord {
  std::string kind;  // "step" or "eval"
  std::int64_t step = 0;
  int epoch = 0;
  std::optional<LossBreakdown> losses;
  std::optional<double> student_error;
  std::optional<double> teacher_error;
  std::optional<double> teacher_error_last_k;
  double wall_time = 0.0;

  /// One JSONL line; wall time optional so streams can be compared.
  std::string to_json(bool include_wall_time = true) const;
};

struct StepSchedule {
  std::int64_t total_steps = 1;
  std::int64_t ramp_steps = 1;
};

/// One joint update: losses, Adam on encoder + classifier, SGD on decoders,
/// EMA teacher, step counter.
MetricsRecord train_step(ModelState& state, std::span<const LabeledImage> labeled,
                         std::span<const Image> unlabeled, const TrainConfig& cfg,
                         const StepSchedule& schedule, TrainerRngs& rngs);

/// Fraction of misclassified test examples.
double evaluate(ModelState& state, std::span<const LabeledImage> test, bool use_teacher = true,
                int batch_size = 256);
double error_rate(std::span<const int> predictions, std::span<const LabeledImage> test);
std::vector<int> predict(ModelState& state, std::span<const Image> images, bool use_teacher,
                         int batch_size = 256);

/// Running mean over the last K evaluations.
class EvalTracker {
 public:
  explicit EvalTracker(int k = 20) : k_(k) {}
  void add(double error);
  double mean() const;
  std::size_t size() const { return window_.size(); }
  const std::deque<double>& window() const { return window_; }

 private:
  int k_;
  std::deque<double> window_;
};

struct TrainOptions {
  /// Run directory; empty disables every file output.
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume_from;
  /// Stop after this many completed epochs (the run stays resumable).
  std::optional<int> stop_after_epoch;
  std::function<void(const MetricsRecord&)> on_record;
};

struct TrainResult {
  ModelState state;
  std::vector<MetricsRecord> log;
  double final_teacher_error = 1.0;
  double final_student_error = 1.0;
  double mean_teacher_error_last_k = 1.0;
  int epochs_completed = 0;
};

std::int64_t steps_per_epoch(const TrainConfig& cfg, const DatasetSplit& data);

TrainResult train(const TrainConfig& cfg, const DatasetSplit& data, const TrainOptions& options = {});

}  // namespace enaet

#endif  // ENAET_TRAINER_HPP
