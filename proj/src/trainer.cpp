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

#include "enaet/trainer.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "enaet/checkpoint.hpp"

namespace enaet {

namespace {

MixMatchConfig mixmatch_config(const TrainConfig& cfg) {
  MixMatchConfig m;
  m.temperature = cfg.temperature;
  m.augmentations = cfg.augmentations;
  m.beta_param = cfg.beta_param;
  m.max_shift = cfg.max_shift;
  return m;
}

std::string join_doubles(const std::deque<double>& values) {
  std::string out;
  char buf[32];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    if (!out.empty()) out += ',';
    out += buf;
  }
  return out;
}

std::deque<double> split_doubles(const std::string& s) {
  std::deque<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

/// Concatenated permutations of [0, n) covering `count` draws.
std::vector<std::size_t> epoch_order(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(count);
  std::vector<std::size_t> perm(n);
  while (out.size() < count) {
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    for (std::size_t i : perm) {
      if (out.size() == count) break;
      out.push_back(i);
    }
  }
  return out;
}

}  // namespace

double ramp_weight(std::int64_t step, double max_weight, std::int64_t ramp_steps) {
  if (ramp_steps <= 0) throw std::invalid_argument("ramp_steps must be positive");
  const double frac = std::min(1.0, static_cast<double>(std::max<std::int64_t>(step, 0)) /
                                        static_cast<double>(ramp_steps));
  return max_weight * frac;
}

double cosine_lr(std::int64_t step, std::int64_t total_steps, double initial, double final_value) {
  if (total_steps <= 0) return initial;
  const double t = std::clamp(static_cast<double>(step) / static_cast<double>(total_steps), 0.0, 1.0);
  return final_value + 0.5 * (initial - final_value) * (1.0 + std::cos(std::numbers::pi * t));
}

void ema_update(Tensor& teacher, const Tensor& student, double alpha) {
  if (!teacher.same_shape(student))
    throw std::invalid_argument("ema_update: shape mismatch " + teacher.shape_string() + " vs " +
                                student.shape_string());
  for (std::size_t i = 0; i < teacher.size(); ++i)
    teacher[i] = alpha * teacher[i] + (1.0 - alpha) * student[i];
}

void ema_update(ModelState& state, double alpha) {
  const auto teacher = teacher_parameters(state);
  const auto student = backbone_parameters(state);
  for (std::size_t i = 0; i < teacher.size(); ++i)
    ema_update(teacher[i].var->value, student[i].var->value, alpha);
  const auto tb = teacher_buffers(state);
  const auto sb = backbone_buffers(state);
  for (std::size_t i = 0; i < tb.size(); ++i) ema_update(*tb[i].tensor, *sb[i].tensor, alpha);
}

double effective_ema_alpha(std::int64_t step, double alpha, bool warmup) {
  if (!warmup) return alpha;
  return std::min(alpha, 1.0 - 1.0 / (static_cast<double>(step) + 1.0));
}

void adam_update(const std::vector<NamedParam>& params, AdamState& state, std::int64_t t,
                 double lr, double beta1, double beta2, double eps) {
  if (t < 1) throw std::invalid_argument("adam_update: step count starts at 1");
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Node& p = *params[i].var;
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    const bool has_grad = !p.grad.empty();
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = has_grad ? p.grad[j] : 0.0;
      m[j] = beta1 * m[j] + (1.0 - beta1) * g;
      v[j] = beta2 * v[j] + (1.0 - beta2) * g * g;
      p.value[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
    }
  }
}

void sgd_update(const std::vector<NamedParam>& params, SgdState& state, double lr,
                double momentum, double weight_decay) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    Node& p = *params[i].var;
    Tensor& vel = state.velocity[i];
    const bool has_grad = !p.grad.empty();
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = (has_grad ? p.grad[j] : 0.0) + weight_decay * p.value[j];
      vel[j] = momentum * vel[j] + g;
      p.value[j] -= lr * vel[j];
    }
  }
}

TrainerRngs TrainerRngs::from_seed(std::uint64_t seed) {
  return TrainerRngs{Rng::derive(seed, 1), Rng::derive(seed, 2), Rng::derive(seed, 3)};
}

StepPlan plan_step(ModelState& state, std::span<const LabeledImage> labeled,
                   std::span<const Image> unlabeled, const TrainConfig& cfg, TrainerRngs& rngs) {
  StepPlan plan;
  plan.mixmatch = mixmatch_batch(labeled, unlabeled, state, mixmatch_config(cfg), rngs.mixmatch);
  plan.regularizers = cfg.regularizers;
  if (!plan.regularizers) return plan;

  plan.aet_sources.assign(unlabeled.begin(), unlabeled.end());
  plan.consistency_rows = static_cast<int>(unlabeled.size());
  if (cfg.aet_include_labeled)
    for (const auto& item : labeled) plan.aet_sources.push_back(item.image);

  const int n = static_cast<int>(plan.aet_sources.size());
  for (Family f : kAllFamilies) {
    const int k = static_cast<int>(f);
    const int dof = degrees_of_freedom(f);
    plan.aet_targets[k] = Tensor({n, dof});
    plan.transformed[k].reserve(plan.aet_sources.size());
    for (int i = 0; i < n; ++i) {
      const Image& src = plan.aet_sources[i];
      TransformTarget target;
      if (f == Family::Ccbs) {
        const PhotometricTransform t = sample_ccbs(rngs.transforms);
        plan.transformed[k].push_back(apply_ccbs(src, t));
        target = target_vector(t);
      } else {
        const SpatialTransform t = sample_spatial(to_spatial(f), rngs.transforms);
        plan.transformed[k].push_back(warp(src, t));
        target = target_vector(t);
      }
      std::copy(target.values.begin(), target.values.end(),
                plan.aet_targets[k].data() + static_cast<std::size_t>(i) * dof);
    }
  }
  return plan;
}

LossGraph build_loss(ModelState& state, const StepPlan& plan, const LossWeights& weights,
                     Tape* tape) {
  const ModelConfig& mc = state.config;
  auto [l_x, l_u] =
      ssl_loss_graph(state, plan.mixmatch.labeled, plan.mixmatch.unlabeled, NormMode::kTrain, tape);

  std::vector<Var> terms{l_x, l_u};
  std::array<Var, kNumFamilies> aet{};
  std::array<Var, kNumFamilies> cl{};
  if (plan.regularizers && !plan.aet_sources.empty()) {
    const int n = static_cast<int>(plan.aet_sources.size());
    std::vector<const Image*> all;
    for (const auto& img : plan.aet_sources) all.push_back(&img);
    for (const auto& group : plan.transformed)
      for (const auto& img : group) all.push_back(&img);
    Var images = make_constant(to_batch(std::span<const Image* const>(all)));
    Var feats = encode(state.student.encoder, mc, images, NormMode::kTrainFrozen, tape);
    Var feat_orig = ops::slice_rows(tape, feats, 0, n);
    Var trans_feats = ops::slice_rows(tape, feats, n, kNumFamilies * n);
    Var trans_probs = ops::softmax(
        tape, classifier_logits(state.student.classifier, mc, trans_feats, NormMode::kTrainFrozen,
                                tape));
    for (Family f : kAllFamilies) {
      const int k = static_cast<int>(f);
      Var feat_k = ops::slice_rows(tape, feats, (k + 1) * n, n);
      Var pred = decode_transform(state.student, mc, f, feat_orig, feat_k, NormMode::kTrain, tape);
      aet[k] = ops::mean_squared_error(tape, pred, plan.aet_targets[k]);
      Var probs_k = ops::slice_rows(tape, trans_probs, k * n, plan.consistency_rows);
      cl[k] = ops::kl_divergence(tape, plan.mixmatch.guesses.sharpened, probs_k, kProbabilityFloor);
    }
  } else {
    for (int k = 0; k < kNumFamilies; ++k) {
      aet[k] = make_constant(Tensor({1}, 0.0));
      cl[k] = make_constant(Tensor({1}, 0.0));
    }
  }
  terms.insert(terms.end(), aet.begin(), aet.end());
  terms.insert(terms.end(), cl.begin(), cl.end());

  LossBreakdown values;
  values.l_labeled = l_x->value[0];
  values.l_unlabeled = l_u->value[0];
  for (int k = 0; k < kNumFamilies; ++k) {
    values.l_aet[k] = aet[k]->value[0];
    values.l_cl[k] = cl[k]->value[0];
  }
  LossGraph g;
  g.breakdown = total_loss(values, weights);
  g.total = ops::weighted_sum(tape, terms, flat_weights(weights));
  return g;
}

LossWeights ramped_weights(const TrainConfig& cfg, std::int64_t step, std::int64_t ramp_steps) {
  const double w = ramp_weight(step, 1.0, ramp_steps);
  LossWeights out;
  out.lambda_u = cfg.lambda_u_max * w;
  for (int k = 0; k < kNumFamilies; ++k) out.lambda_aet[k] = cfg.lambda_k[k] * w;
  out.gamma = cfg.gamma * w;
  return out;
}

std::string MetricsRecord::to_json(bool include_wall_time) const {
  nlohmann::ordered_json j;
  j["kind"] = kind;
  j["step"] = step;
  j["epoch"] = epoch;
  if (losses) {
    j["l_labeled"] = losses->l_labeled;
    j["l_unlabeled"] = losses->l_unlabeled;
    for (Family f : kAllFamilies)
      j["l_aet_" + std::string(family_name(f))] = losses->l_aet[static_cast<int>(f)];
    for (Family f : kAllFamilies)
      j["l_cl_" + std::string(family_name(f))] = losses->l_cl[static_cast<int>(f)];
    j["lambda_u"] = losses->weights_applied.lambda_u;
    for (Family f : kAllFamilies)
      j["lambda_" + std::string(family_name(f))] =
          losses->weights_applied.lambda_aet[static_cast<int>(f)];
    j["gamma"] = losses->weights_applied.gamma;
    j["total"] = losses->total;
  }
  if (student_error) j["student_error"] = *student_error;
  if (teacher_error) j["teacher_error"] = *teacher_error;
  if (teacher_error_last_k) j["teacher_error_last_k"] = *teacher_error_last_k;
  if (include_wall_time) j["wall_time"] = wall_time;
  return j.dump();
}

MetricsRecord train_step(ModelState& state, std::span<const LabeledImage> labeled,
                         std::span<const Image> unlabeled, const TrainConfig& cfg,
                         const StepSchedule& schedule, TrainerRngs& rngs) {
  const LossWeights weights = ramped_weights(cfg, state.step, schedule.ramp_steps);
  const StepPlan plan = plan_step(state, labeled, unlabeled, cfg, rngs);

  const auto backbone = backbone_parameters(state);
  const auto decoders = decoder_parameters(state);
  zero_grads(backbone);
  zero_grads(decoders);

  Tape tape;
  LossGraph graph = build_loss(state, plan, weights, &tape);
  tape.backward(graph.total);

  adam_update(backbone, state.adam, state.step + 1, cfg.lr_enc_cls, cfg.adam_beta1,
              cfg.adam_beta2, cfg.adam_eps);
  sgd_update(decoders, state.sgd,
             cosine_lr(state.step, schedule.total_steps, cfg.lr_dec_init, cfg.lr_dec_final),
             cfg.momentum_dec, cfg.weight_decay_dec);
  ema_update(state, effective_ema_alpha(state.step + 1, cfg.ema_alpha, cfg.ema_warmup));
  ++state.step;

  MetricsRecord rec;
  rec.kind = "step";
  rec.step = state.step;
  rec.losses = graph.breakdown;
  return rec;
}

std::vector<int> predict(ModelState& state, std::span<const Image> images, bool use_teacher,
                         int batch_size) {
  Encoder& enc = use_teacher ? state.teacher_encoder : state.student.encoder;
  Head& head = use_teacher ? state.teacher_classifier : state.student.classifier;
  std::vector<int> out;
  out.reserve(images.size());
  for (std::size_t begin = 0; begin < images.size(); begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(images.size(), begin + static_cast<std::size_t>(batch_size));
    Var batch = make_constant(to_batch(images.subspan(begin, end - begin)));
    Var logits = classifier_logits(head, state.config,
                                   encode(enc, state.config, batch, NormMode::kEval, nullptr),
                                   NormMode::kEval, nullptr);
    const int k = logits->value.dim(1);
    for (std::size_t r = 0; r < end - begin; ++r) {
      const double* z = logits->value.data() + r * k;
      out.push_back(static_cast<int>(std::max_element(z, z + k) - z));
    }
  }
  return out;
}

double error_rate(std::span<const int> predictions, std::span<const LabeledImage> test) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  if (predictions.size() != test.size())
    throw std::invalid_argument("evaluate: prediction count mismatch");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < test.size(); ++i) wrong += predictions[i] != test[i].label;
  return static_cast<double>(wrong) / static_cast<double>(test.size());
}

double evaluate(ModelState& state, std::span<const LabeledImage> test, bool use_teacher,
                int batch_size) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  std::vector<Image> images;
  images.reserve(test.size());
  for (const auto& item : test) images.push_back(item.image);
  const auto preds = predict(state, images, use_teacher, batch_size);
  return error_rate(preds, test);
}

void EvalTracker::add(double error) {
  window_.push_back(error);
  while (static_cast<int>(window_.size()) > k_) window_.pop_front();
}

double EvalTracker::mean() const {
  if (window_.empty()) return 1.0;
  return std::accumulate(window_.begin(), window_.end(), 0.0) / static_cast<double>(window_.size());
}

std::int64_t steps_per_epoch(const TrainConfig& cfg, const DatasetSplit& data) {
  if (cfg.steps_per_epoch > 0) return cfg.steps_per_epoch;
  const std::size_t pool = data.unlabeled.empty() ? data.labeled.size() : data.unlabeled.size();
  const auto b = static_cast<std::size_t>(cfg.batch_size);
  return static_cast<std::int64_t>(std::max<std::size_t>(1, (pool + b - 1) / b));
}

TrainResult train(const TrainConfig& cfg, const DatasetSplit& data, const TrainOptions& options) {
  cfg.validate();
  if (data.labeled.empty()) throw std::invalid_argument("train: no labeled examples");
  if (data.test.empty()) throw std::invalid_argument("train: empty test set");

  const Image& probe = data.labeled.front().image;
  if (probe.height != probe.width) throw std::invalid_argument("train: images must be square");
  const ModelConfig mc = model_config_for(cfg, probe.height, probe.channels, data.num_classes,
                                          data.metadata.channel_mean, data.metadata.channel_std);

  Rng init_rng = Rng::derive(cfg.seed, 0);
  TrainResult result{init_model(mc, init_rng), {}, 1.0, 1.0, 1.0, 0};
  ModelState& state = result.state;
  TrainerRngs rngs = TrainerRngs::from_seed(cfg.seed);
  EvalTracker tracker(cfg.last_k_report);

  const std::int64_t spe = steps_per_epoch(cfg, data);
  StepSchedule schedule;
  schedule.total_steps = std::max<std::int64_t>(1, spe * cfg.epochs);
  schedule.ramp_steps =
      cfg.ramp_steps > 0 ? cfg.ramp_steps : std::max<std::int64_t>(1, schedule.total_steps / 10);
  const std::uint64_t hash = config_hash(cfg);

  int start_epoch = 0;
  if (options.resume_from) {
    const Checkpoint ckpt = read_checkpoint(*options.resume_from);
    if (ckpt.config_hash != hash)
      throw std::runtime_error("checkpoint was written by a different configuration");
    restore_model(state, ckpt);
    rngs.data.set_state(ckpt.strings.at("rng.data"));
    rngs.mixmatch.set_state(ckpt.strings.at("rng.mixmatch"));
    rngs.transforms.set_state(ckpt.strings.at("rng.transforms"));
    start_epoch = std::stoi(ckpt.strings.at("trainer.epoch"));
    for (double e : split_doubles(ckpt.strings.at("trainer.eval_window"))) tracker.add(e);
    if (auto it = ckpt.strings.find("trainer.last_teacher_error"); it != ckpt.strings.end())
      result.final_teacher_error = std::stod(it->second);
    if (auto it = ckpt.strings.find("trainer.last_student_error"); it != ckpt.strings.end())
      result.final_student_error = std::stod(it->second);
  }
  result.epochs_completed = start_epoch;
  result.mean_teacher_error_last_k = tracker.mean();

  const bool files = !options.out_dir.empty();
  std::ofstream metrics;
  const auto save = [&](const std::filesystem::path& path, int epochs_done) {
    Checkpoint ckpt;
    store_model(state, ckpt);
    ckpt.config_hash = hash;
    ckpt.strings["rng.data"] = rngs.data.state();
    ckpt.strings["rng.mixmatch"] = rngs.mixmatch.state();
    ckpt.strings["rng.transforms"] = rngs.transforms.state();
    ckpt.strings["trainer.epoch"] = std::to_string(epochs_done);
    ckpt.strings["trainer.eval_window"] = join_doubles(tracker.window());
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", result.final_teacher_error);
    ckpt.strings["trainer.last_teacher_error"] = buf;
    std::snprintf(buf, sizeof buf, "%.17g", result.final_student_error);
    ckpt.strings["trainer.last_student_error"] = buf;
    write_checkpoint(path, ckpt);
  };
  if (files) {
    std::filesystem::create_directories(options.out_dir);
    std::ofstream snapshot(options.out_dir / "config.cfg");
    snapshot << to_config_text(cfg);
    if (!snapshot) throw std::runtime_error("cannot write config snapshot");
    metrics.open(options.out_dir / "metrics.jsonl",
                 options.resume_from ? std::ios::app : std::ios::trunc);
    if (!metrics) throw std::runtime_error("cannot open metrics file");
    if (!options.resume_from) save(options.out_dir / "init.ckpt", 0);
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const auto emit = [&](MetricsRecord rec) {
    rec.wall_time = elapsed();
    if (files) metrics << rec.to_json() << '\n';
    if (options.on_record) options.on_record(rec);
    result.log.push_back(std::move(rec));
  };

  std::vector<Image> stripped;
  if (data.unlabeled.empty())
    for (const auto& item : data.labeled) stripped.push_back(item.image);
  const std::vector<Image>& pool = data.unlabeled.empty() ? stripped : data.unlabeled;
  const auto b = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    const std::size_t draws = static_cast<std::size_t>(spe) * b;
    const auto u_order = epoch_order(pool.size(), draws, rngs.data);
    const auto l_order = epoch_order(data.labeled.size(), draws, rngs.data);
    std::vector<LabeledImage> x_batch(b);
    std::vector<Image> u_batch(b);
    for (std::int64_t s = 0; s < spe; ++s) {
      for (std::size_t i = 0; i < b; ++i) {
        x_batch[i] = data.labeled[l_order[s * b + i]];
        u_batch[i] = pool[u_order[s * b + i]];
      }
      MetricsRecord rec = train_step(state, x_batch, u_batch, cfg, schedule, rngs);
      rec.epoch = epoch;
      emit(std::move(rec));
    }

    const bool last = epoch + 1 == cfg.epochs;
    if ((epoch + 1) % cfg.eval_every == 0 || last) {
      MetricsRecord rec;
      rec.kind = "eval";
      rec.step = state.step;
      rec.epoch = epoch;
      result.final_student_error = evaluate(state, data.test, false);
      result.final_teacher_error = evaluate(state, data.test, true);
      tracker.add(result.final_teacher_error);
      rec.student_error = result.final_student_error;
      rec.teacher_error = result.final_teacher_error;
      rec.teacher_error_last_k = tracker.mean();
      emit(std::move(rec));
    }
    result.epochs_completed = epoch + 1;
    result.mean_teacher_error_last_k = tracker.mean();

    const bool stopping = options.stop_after_epoch && *options.stop_after_epoch == epoch + 1;
    if (files && (last || stopping ||
                  (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0)))
      save(options.out_dir / "last.ckpt", epoch + 1);
    if (files) metrics.flush();
    if (stopping) break;
  }
  return result;
}

}  // namespace enaet
