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

#ifndef ENAET_MIXMATCH_HPP
#define ENAET_MIXMATCH_HPP

#include <span>
#include <utility>
#include <vector>

#include "enaet/data.hpp"
#include "enaet/model.hpp"

namespace enaet {

struct MixMatchConfig {
  double temperature = 0.5;
  int augmentations = 2;  // K
  double beta_param = 0.75;
  int max_shift = 4;
  bool augment = true;  // standard augmentation on/off
  bool mix = true;      // mixup on/off (off == lambda' = 1)
};

struct MixedBatch {
  enum class Origin { kLabeled, kUnlabeled };
  std::vector<Image> inputs;
  Tensor targets;  // rows on the simplex
  Origin origin = Origin::kLabeled;
};

struct MixupResult {
  Image image;
  std::vector<double> label;
  double weight = 1.0;  // lambda' = max(lambda, 1 - lambda)
};

/// lambda' * a + (1 - lambda') * b with lambda' = max(lambda, 1 - lambda).
MixupResult mixup_with_lambda(const Image& a_image, std::span<const double> a_label,
                              const Image& b_image, std::span<const double> b_label,
                              double lambda);
/// lambda ~ Beta(alpha, alpha).
MixupResult mixup(const Image& a_image, std::span<const double> a_label, const Image& b_image,
                  std::span<const double> b_label, double alpha, Rng& rng);

struct GuessedLabels {
  Tensor averaged;   // mean classifier output over the K augmentations
  Tensor sharpened;  // averaged, sharpened at temperature T
};

/// Label guessing with the student under batch statistics (no running-stat
/// update, no gradient).
GuessedLabels guess_labels(ModelState& state, std::span<const Image> unlabeled,
                           const MixMatchConfig& cfg, Rng& rng);

struct MixMatchOutput {
  MixedBatch labeled;    // X', |X| rows
  MixedBatch unlabeled;  // U', K * |U| rows
  GuessedLabels guesses;
};

MixMatchOutput mixmatch_batch(std::span<const LabeledImage> labeled,
                              std::span<const Image> unlabeled, ModelState& state,
                              const MixMatchConfig& cfg, Rng& rng);

/// Graph version: (mean CE over X', mean squared L2 over U') for batches
/// pushed through the student together.
std::pair<Var, Var> ssl_loss_graph(ModelState& state, const MixedBatch& x_mixed,
                                   const MixedBatch& u_mixed, NormMode mode, Tape* tape);
std::pair<double, double> ssl_loss(ModelState& state, const MixedBatch& x_mixed,
                                   const MixedBatch& u_mixed);

Tensor one_hot(std::span<const int> labels, int num_classes);

}  // namespace enaet

#endif  // ENAET_MIXMATCH_HPP
