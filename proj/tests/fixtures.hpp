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

#ifndef ENAET_TESTS_FIXTURES_HPP
#define ENAET_TESTS_FIXTURES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "enaet/trainer.hpp"

namespace enaet::testing {

inline DatasetSplit tiny_split(std::uint64_t seed, int image_size = 8) {
  SyntheticConfig sc;
  sc.image_size = image_size;
  sc.train_per_class = 6;
  sc.test_per_class = 3;
  sc.labels_per_class = 2;
  Rng rng = Rng::derive(seed, 0);
  return make_synthetic(sc, rng);
}

inline TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 2;
  cfg.steps_per_epoch = 3;
  cfg.encoder_widths = {2, 3, 3};
  cfg.head_width = 4;
  cfg.max_shift = 1;
  cfg.lambda_u_max = 2.0;
  cfg.eval_every = 1;
  cfg.last_k_report = 2;
  cfg.n_labels = 0;
  return cfg;
}

struct GradCheck {
  std::size_t parameters = 0;
  int coordinates = 0;
  double max_relative_error = 0.0;
};

/// Central differences of the full objective against the tape gradient at
/// `coordinates` random parameter entries (encoder, classifier and decoders).
inline GradCheck full_loss_gradient_check(std::uint64_t seed, int coordinates, double h = 1e-5) {
  const DatasetSplit data = tiny_split(seed);
  TrainConfig cfg = tiny_config();
  const ModelConfig mc = model_config_for(cfg, data.labeled.front().image.height,
                                          data.labeled.front().image.channels, data.num_classes,
                                          data.metadata.channel_mean, data.metadata.channel_std);
  Rng init = Rng::derive(seed, 1);
  ModelState state = init_model(mc, init);
  TrainerRngs rngs = TrainerRngs::from_seed(seed);
  const std::vector<LabeledImage> xb(data.labeled.begin(), data.labeled.begin() + cfg.batch_size);
  const std::vector<Image> ub(data.unlabeled.begin(), data.unlabeled.begin() + cfg.batch_size);
  const StepPlan plan = plan_step(state, xb, ub, cfg, rngs);
  LossWeights w;
  w.lambda_u = 2.0;
  w.lambda_aet = {1.0, 0.75, 0.5, 0.2, 0.05};
  w.gamma = 0.7;

  auto params = backbone_parameters(state);
  const auto dec = decoder_parameters(state);
  params.insert(params.end(), dec.begin(), dec.end());
  zero_grads(params);
  Tape tape;
  const LossGraph g = build_loss(state, plan, w, &tape);
  tape.backward(g.total);

  GradCheck out;
  out.parameters = parameter_count(params);
  Rng pick = Rng::derive(seed, 7);
  for (int i = 0; i < coordinates; ++i) {
    const auto& p = params[static_cast<std::size_t>(pick.uniform_int(0, static_cast<int>(params.size()) - 1))];
    const auto j = static_cast<std::size_t>(pick.uniform_int(0, static_cast<int>(p.var->value.size()) - 1));
    const double analytic = p.var->grad.empty() ? 0.0 : p.var->grad[j];
    const double old = p.var->value[j];
    p.var->value[j] = old + h;
    const double fp = build_loss(state, plan, w, nullptr).total->value[0];
    p.var->value[j] = old - h;
    const double fm = build_loss(state, plan, w, nullptr).total->value[0];
    p.var->value[j] = old;
    const double numeric = (fp - fm) / (2.0 * h);
    const double rel = std::abs(analytic - numeric) /
                       std::max({std::abs(analytic), std::abs(numeric), 1e-7});
    out.max_relative_error = std::max(out.max_relative_error, rel);
    ++out.coordinates;
  }
  return out;
}

/// Encoder, classifier and teacher tensors (values and normalization buffers).
inline std::vector<Tensor> backbone_snapshot(ModelState& s) {
  std::vector<Tensor> out;
  for (const auto& p : backbone_parameters(s)) out.push_back(p.var->value);
  for (const auto& p : teacher_parameters(s)) out.push_back(p.var->value);
  for (const auto& b : backbone_buffers(s)) out.push_back(*b.tensor);
  for (const auto& b : teacher_buffers(s)) out.push_back(*b.tensor);
  return out;
}

inline std::vector<Tensor> full_snapshot(ModelState& s) {
  std::vector<Tensor> out = backbone_snapshot(s);
  for (const auto& p : decoder_parameters(s)) out.push_back(p.var->value);
  for (const auto& b : decoder_buffers(s)) out.push_back(*b.tensor);
  for (const auto& t : s.adam.first_moment) out.push_back(t);
  for (const auto& t : s.adam.second_moment) out.push_back(t);
  for (const auto& t : s.sgd.velocity) out.push_back(t);
  return out;
}

inline double max_snapshot_diff(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].same_shape(b[i])) return INFINITY;
    for (std::size_t k = 0; k < a[i].size(); ++k) worst = std::max(worst, std::abs(a[i][k] - b[i][k]));
  }
  return worst;
}

}  // namespace enaet::testing

#endif  // ENAET_TESTS_FIXTURES_HPP
