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

#ifndef ENAET_CONFIG_HPP
#define ENAET_CONFIG_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "enaet/model.hpp"
#include "enaet/transforms.hpp"

namespace enaet {

/// Every hyperparameter of a run. Field names double as keys of the flat
/// `key = value` config file.
struct TrainConfig {
  int batch_size = 64;
  int epochs = 30;
  int steps_per_epoch = 0;  // 0: ceil(|unlabeled| / batch_size)

  double ema_alpha = 0.999;
  bool ema_warmup = true;  // alpha_t = min(ema_alpha, 1 - 1 / (t + 1))

  double lr_enc_cls = 0.002;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double lr_dec_init = 0.1;
  double lr_dec_final = 1e-4;
  double momentum_dec = 0.9;
  double weight_decay_dec = 5e-4;

  std::array<double, kNumFamilies> lambda_k{1.0, 0.75, 0.5, 0.2, 0.05};
  double gamma = 0.2;
  double lambda_u_max = 25.0;
  int ramp_steps = 0;  // 0: 10% of total steps

  double temperature = 0.5;
  int augmentations = 2;
  double beta_param = 0.75;
  int max_shift = 4;

  bool aet_include_labeled = false;
  /// false: plain MixMatch path, AET / CL terms neither computed nor sampled.
  bool regularizers = true;

  std::uint64_t seed = 0;
  int n_labels = 40;  // labeled examples drawn per run; 0 keeps every label
  int eval_every = 1;  // epochs
  int last_k_report = 20;
  int checkpoint_every = 1;  // epochs; 0 disables periodic checkpoints

  // Backbone
  std::array<int, 3> encoder_widths{16, 32, 64};
  int head_width = 64;

  void validate() const;
};

using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(const std::string& text);
ConfigMap read_config_file(const std::filesystem::path& path);
/// Applies key/value overrides; unknown keys and malformed values throw.
void apply_config(TrainConfig& cfg, const ConfigMap& values);
std::string to_config_text(const TrainConfig& cfg);
/// FNV-1a of the canonical config text.
std::uint64_t config_hash(const TrainConfig& cfg);

ModelConfig model_config_for(const TrainConfig& cfg, int image_size, int channels, int num_classes,
                             const std::vector<double>& mean, const std::vector<double>& stddev);

}  // namespace enaet

#endif  // ENAET_CONFIG_HPP
