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

#include "enaet/mixmatch.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "enaet/losses.hpp"

namespace enaet {

namespace {

std::span<const double> row(const Tensor& t, std::size_t r) {
  const std::size_t n = t.row_size();
  return {t.data() + r * n, n};
}

Var batch_var(const std::vector<Image>& images) { return make_constant(to_batch(images)); }

}  // namespace

Tensor one_hot(std::span<const int> labels, int num_classes) {
  Tensor t({static_cast<int>(labels.size()), num_classes}, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) throw std::out_of_range("label out of range");
    t[i * num_classes + labels[i]] = 1.0;
  }
  return t;
}

MixupResult mixup_with_lambda(const Image& a_image, std::span<const double> a_label,
                              const Image& b_image, std::span<const double> b_label,
                              double lambda) {
  if (!a_image.same_shape(b_image)) throw std::invalid_argument("mixup: image shapes differ");
  if (a_label.size() != b_label.size()) throw std::invalid_argument("mixup: label sizes differ");
  const double w = std::max(lambda, 1.0 - lambda);
  MixupResult out;
  out.weight = w;
  out.image = a_image;
  if (w != 1.0) {
    for (std::size_t i = 0; i < out.image.pixels.size(); ++i)
      out.image.pixels[i] = w * a_image.pixels[i] + (1.0 - w) * b_image.pixels[i];
  }
  out.label.resize(a_label.size());
  for (std::size_t i = 0; i < a_label.size(); ++i)
    out.label[i] = w == 1.0 ? a_label[i] : w * a_label[i] + (1.0 - w) * b_label[i];
  return out;
}

MixupResult mixup(const Image& a_image, std::span<const double> a_label, const Image& b_image,
                  std::span<const double> b_label, double alpha, Rng& rng) {
  if (!(alpha > 0.0)) throw std::invalid_argument("mixup: alpha must be positive");
  return mixup_with_lambda(a_image, a_label, b_image, b_label, rng.beta(alpha, alpha));
}

GuessedLabels guess_labels(ModelState& state, std::span<const Image> unlabeled,
                           const MixMatchConfig& cfg, Rng& rng) {
  if (cfg.augmentations < 1) throw std::invalid_argument("guess_labels: K must be at least 1");
  if (unlabeled.empty()) throw std::invalid_argument("guess_labels: empty batch");
  const int n = static_cast<int>(unlabeled.size());
  const int classes = state.config.num_classes;
  GuessedLabels g;
  g.averaged = Tensor({n, classes}, 0.0);
  for (int k = 0; k < cfg.augmentations; ++k) {
    std::vector<Image> batch;
    batch.reserve(unlabeled.size());
    for (const Image& u : unlabeled)
      batch.push_back(cfg.augment ? standard_augment(u, rng, cfg.max_shift) : u);
    Var feats = encode(state.student.encoder, state.config, batch_var(batch),
                       NormMode::kTrainFrozen, nullptr);
    Var probs = classify(state.student.classifier, state.config, feats, NormMode::kTrainFrozen,
                         nullptr);
    for (std::size_t i = 0; i < g.averaged.size(); ++i) g.averaged[i] += probs->value[i];
  }
  for (double& v : g.averaged.values()) v /= cfg.augmentations;
  g.sharpened = Tensor({n, classes});
  for (int i = 0; i < n; ++i) {
    const auto s = sharpen(row(g.averaged, i), cfg.temperature);
    std::copy(s.begin(), s.end(), g.sharpened.data() + static_cast<std::size_t>(i) * classes);
  }
  return g;
}

MixMatchOutput mixmatch_batch(std::span<const LabeledImage> labeled,
                              std::span<const Image> unlabeled, ModelState& state,
                              const MixMatchConfig& cfg, Rng& rng) {
  if (labeled.size() != unlabeled.size())
    throw std::invalid_argument("mixmatch_batch: labeled and unlabeled batch sizes differ");
  if (labeled.empty()) throw std::invalid_argument("mixmatch_batch: empty batch");
  const int classes = state.config.num_classes;
  const std::size_t nx = labeled.size();
  const std::size_t nu = unlabeled.size();
  const int k_aug = cfg.augmentations;

  std::vector<Image> x_aug;
  std::vector<int> labels;
  for (const auto& item : labeled) {
    x_aug.push_back(cfg.augment ? standard_augment(item.image, rng, cfg.max_shift) : item.image);
    labels.push_back(item.label);
  }
  const Tensor x_targets = one_hot(labels, classes);

  MixMatchOutput out;
  out.guesses = guess_labels(state, unlabeled, cfg, rng);

  // U-hat: K augmented copies, copy-major, each paired with its guess.
  std::vector<Image> u_aug;
  std::vector<std::size_t> u_source;
  for (int k = 0; k < k_aug; ++k)
    for (std::size_t i = 0; i < nu; ++i) {
      u_aug.push_back(cfg.augment ? standard_augment(unlabeled[i], rng, cfg.max_shift)
                                  : unlabeled[i]);
      u_source.push_back(i);
    }

  // W = shuffle(concat(X-hat, U-hat))
  const std::size_t pool = nx + u_aug.size();
  std::vector<std::size_t> order(pool);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  const auto pool_image = [&](std::size_t j) -> const Image& {
    return j < nx ? x_aug[j] : u_aug[j - nx];
  };
  const auto pool_label = [&](std::size_t j) {
    return j < nx ? row(x_targets, j) : row(out.guesses.sharpened, u_source[j - nx]);
  };

  const auto mix = [&](const Image& img, std::span<const double> lab, std::size_t w_index) {
    const std::size_t j = order[w_index];
    if (!cfg.mix) return mixup_with_lambda(img, lab, pool_image(j), pool_label(j), 1.0);
    return mixup(img, lab, pool_image(j), pool_label(j), cfg.beta_param, rng);
  };

  out.labeled.origin = MixedBatch::Origin::kLabeled;
  out.labeled.targets = Tensor({static_cast<int>(nx), classes});
  for (std::size_t i = 0; i < nx; ++i) {
    auto m = mix(x_aug[i], row(x_targets, i), i);
    out.labeled.inputs.push_back(std::move(m.image));
    std::copy(m.label.begin(), m.label.end(), out.labeled.targets.data() + i * classes);
  }

  out.unlabeled.origin = MixedBatch::Origin::kUnlabeled;
  out.unlabeled.targets = Tensor({static_cast<int>(u_aug.size()), classes});
  for (std::size_t i = 0; i < u_aug.size(); ++i) {
    auto m = mix(u_aug[i], row(out.guesses.sharpened, u_source[i]), nx + i);
    out.unlabeled.inputs.push_back(std::move(m.image));
    std::copy(m.label.begin(), m.label.end(), out.unlabeled.targets.data() + i * classes);
  }
  return out;
}

std::pair<Var, Var> ssl_loss_graph(ModelState& state, const MixedBatch& x_mixed,
                                   const MixedBatch& u_mixed, NormMode mode, Tape* tape) {
  const int nx = static_cast<int>(x_mixed.inputs.size());
  const int nu = static_cast<int>(u_mixed.inputs.size());
  std::vector<const Image*> all;
  for (const auto& img : x_mixed.inputs) all.push_back(&img);
  for (const auto& img : u_mixed.inputs) all.push_back(&img);
  Var images = make_constant(to_batch(std::span<const Image* const>(all)));
  Var feats = encode(state.student.encoder, state.config, images, mode, tape);
  Var logits = classifier_logits(state.student.classifier, state.config, feats, mode, tape);
  Var l_x = ops::soft_cross_entropy(tape, ops::slice_rows(tape, logits, 0, nx), x_mixed.targets);
  Var l_u = make_constant(Tensor({1}, 0.0));
  if (nu > 0) {
    Var probs_u = ops::softmax(tape, ops::slice_rows(tape, logits, nx, nu));
    l_u = ops::squared_l2_rows(tape, probs_u, u_mixed.targets);
  }
  return {l_x, l_u};
}

std::pair<double, double> ssl_loss(ModelState& state, const MixedBatch& x_mixed,
                                   const MixedBatch& u_mixed) {
  auto [l_x, l_u] = ssl_loss_graph(state, x_mixed, u_mixed, NormMode::kTrainFrozen, nullptr);
  return {l_x->value[0], l_u->value[0]};
}

}  // namespace enaet
