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

#include "enaet/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace enaet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size())
    throw std::invalid_argument("config key '" + key + "': expected a number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size())
    throw std::invalid_argument("config key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <std::size_t N>
std::array<double, N> parse_double_list(const std::string& key, const std::string& v) {
  const auto items = split_list(v);
  if (items.size() != N)
    throw std::invalid_argument("config key '" + key + "': expected " + std::to_string(N) +
                                " comma-separated values");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = parse_double(key, items[i]);
  return out;
}

struct Field {
  const char* name;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

#define ENAET_INT_FIELD(member)                                                          \
  Field {                                                                                \
    #member, [](const TrainConfig& c) { return std::to_string(c.member); },              \
        [](TrainConfig& c, const std::string& v) {                                       \
          c.member = static_cast<decltype(c.member)>(parse_int(#member, v));             \
        }                                                                                \
  }
#define ENAET_DOUBLE_FIELD(member)                                                       \
  Field {                                                                                \
    #member, [](const TrainConfig& c) { return fmt_double(c.member); },                  \
        [](TrainConfig& c, const std::string& v) { c.member = parse_double(#member, v); } \
  }
#define ENAET_BOOL_FIELD(member)                                                         \
  Field {                                                                                \
    #member, [](const TrainConfig& c) { return std::string(c.member ? "true" : "false"); }, \
        [](TrainConfig& c, const std::string& v) { c.member = parse_bool(#member, v); }  \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      ENAET_INT_FIELD(batch_size),
      ENAET_INT_FIELD(epochs),
      ENAET_INT_FIELD(steps_per_epoch),
      ENAET_DOUBLE_FIELD(ema_alpha),
      ENAET_BOOL_FIELD(ema_warmup),
      ENAET_DOUBLE_FIELD(lr_enc_cls),
      ENAET_DOUBLE_FIELD(adam_beta1),
      ENAET_DOUBLE_FIELD(adam_beta2),
      ENAET_DOUBLE_FIELD(adam_eps),
      ENAET_DOUBLE_FIELD(lr_dec_init),
      ENAET_DOUBLE_FIELD(lr_dec_final),
      ENAET_DOUBLE_FIELD(momentum_dec),
      ENAET_DOUBLE_FIELD(weight_decay_dec),
      Field{"lambda_k",
            [](const TrainConfig& c) {
              std::string s;
              for (std::size_t i = 0; i < c.lambda_k.size(); ++i)
                s += (i ? "," : "") + fmt_double(c.lambda_k[i]);
              return s;
            },
            [](TrainConfig& c, const std::string& v) {
              c.lambda_k = parse_double_list<kNumFamilies>("lambda_k", v);
            }},
      ENAET_DOUBLE_FIELD(gamma),
      ENAET_DOUBLE_FIELD(lambda_u_max),
      ENAET_INT_FIELD(ramp_steps),
      ENAET_DOUBLE_FIELD(temperature),
      ENAET_INT_FIELD(augmentations),
      ENAET_DOUBLE_FIELD(beta_param),
      ENAET_INT_FIELD(max_shift),
      ENAET_BOOL_FIELD(aet_include_labeled),
      ENAET_BOOL_FIELD(regularizers),
      ENAET_INT_FIELD(seed),
      ENAET_INT_FIELD(n_labels),
      ENAET_INT_FIELD(eval_every),
      ENAET_INT_FIELD(last_k_report),
      ENAET_INT_FIELD(checkpoint_every),
      Field{"encoder_widths",
            [](const TrainConfig& c) {
              return std::to_string(c.encoder_widths[0]) + "," +
                     std::to_string(c.encoder_widths[1]) + "," +
                     std::to_string(c.encoder_widths[2]);
            },
            [](TrainConfig& c, const std::string& v) {
              const auto items = split_list(v);
              if (items.size() != 3)
                throw std::invalid_argument("config key 'encoder_widths': expected 3 values");
              for (std::size_t i = 0; i < 3; ++i)
                c.encoder_widths[i] = static_cast<int>(parse_int("encoder_widths", items[i]));
            }},
      ENAET_INT_FIELD(head_width),
  };
  return table;
}

#undef ENAET_INT_FIELD
#undef ENAET_DOUBLE_FIELD
#undef ENAET_BOOL_FIELD

}  // namespace

void TrainConfig::validate() const {
  if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
  if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (steps_per_epoch < 0) throw std::invalid_argument("steps_per_epoch must be non-negative");
  if (!(ema_alpha > 0.0 && ema_alpha < 1.0)) throw std::invalid_argument("ema_alpha must be in (0, 1)");
  for (double r : {lr_enc_cls, lr_dec_init, lr_dec_final})
    if (!(r > 0.0)) throw std::invalid_argument("learning rates must be positive");
  if (weight_decay_dec < 0.0) throw std::invalid_argument("weight_decay_dec must be non-negative");
  if (!(momentum_dec >= 0.0 && momentum_dec < 1.0))
    throw std::invalid_argument("momentum_dec must be in [0, 1)");
  for (double l : lambda_k)
    if (l < 0.0) throw std::invalid_argument("lambda_k entries must be non-negative");
  if (gamma < 0.0 || lambda_u_max < 0.0) throw std::invalid_argument("loss weights must be non-negative");
  if (ramp_steps < 0) throw std::invalid_argument("ramp_steps must be non-negative");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (augmentations < 1) throw std::invalid_argument("augmentations must be at least 1");
  if (!(beta_param > 0.0)) throw std::invalid_argument("beta_param must be positive");
  if (max_shift < 0) throw std::invalid_argument("max_shift must be non-negative");
  if (n_labels < 0) throw std::invalid_argument("n_labels must be non-negative");
  if (eval_every <= 0) throw std::invalid_argument("eval_every must be positive");
  if (last_k_report <= 0) throw std::invalid_argument("last_k_report must be positive");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be non-negative");
  for (int w : encoder_widths)
    if (w <= 0) throw std::invalid_argument("encoder widths must be positive");
  if (head_width <= 0) throw std::invalid_argument("head_width must be positive");
}

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

ConfigMap read_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

void apply_config(TrainConfig& cfg, const ConfigMap& values) {
  for (const auto& [key, value] : values) {
    bool found = false;
    for (const Field& f : fields()) {
      if (key == f.name) {
        f.set(cfg, value);
        found = true;
        break;
      }
    }
    if (!found) throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

std::string to_config_text(const TrainConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) out += std::string(f.name) + " = " + f.get(cfg) + "\n";
  return out;
}

std::uint64_t config_hash(const TrainConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : to_config_text(cfg)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

ModelConfig model_config_for(const TrainConfig& cfg, int image_size, int channels, int num_classes,
                             const std::vector<double>& mean, const std::vector<double>& stddev) {
  ModelConfig m;
  m.image_size = image_size;
  m.channels = channels;
  m.num_classes = num_classes;
  m.encoder_widths = cfg.encoder_widths;
  m.head_width = cfg.head_width;
  m.input_mean = mean;
  m.input_std = stddev;
  return m;
}

}  // namespace enaet
