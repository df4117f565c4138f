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

#include "enaet/model.hpp"

#include <cmath>
#include <stdexcept>

namespace enaet {

namespace {

Tensor random_normal(std::vector<int> shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.normal(0.0, stddev);
  return t;
}

ConvBlock make_block(int in, int out, int stride, Rng& rng) {
  ConvBlock b;
  const double fan_in = in * 9.0;
  b.weight = make_parameter(random_normal({out, in, 3, 3}, std::sqrt(2.0 / fan_in), rng));
  b.gamma = make_parameter(Tensor({out}, 1.0));
  b.beta = make_parameter(Tensor({out}, 0.0));
  b.stats.mean = Tensor({out}, 0.0);
  b.stats.var = Tensor({out}, 1.0);
  b.stride = stride;
  return b;
}

Head make_head(int in, int width, int out, Rng& rng) {
  Head h;
  h.block = make_block(in, width, 2, rng);
  h.weight = make_parameter(random_normal({out, width}, 1.0 / std::sqrt(width), rng));
  h.bias = make_parameter(Tensor({out}, 0.0));
  return h;
}

Var block_forward(ConvBlock& b, const ModelConfig& cfg, const Var& x, NormMode mode, Tape* tape) {
  Var y = ops::conv2d(tape, x, b.weight, b.stride, 1);
  y = ops::batch_norm(tape, y, b.gamma, b.beta, b.stats, mode, cfg.norm_momentum);
  return ops::leaky_relu(tape, y, cfg.leaky_slope);
}

Var head_forward(Head& h, const ModelConfig& cfg, const Var& x, NormMode mode, Tape* tape) {
  Var y = block_forward(h.block, cfg, x, mode, tape);
  y = ops::global_avg_pool(tape, y);
  return ops::linear(tape, y, h.weight, h.bias);
}

Var copy_var(const Var& v) {
  auto n = std::make_shared<Node>();
  n->value = v->value;
  n->requires_grad = v->requires_grad;
  n->is_parameter = v->is_parameter;
  return n;
}

ConvBlock clone_block(const ConvBlock& b) {
  ConvBlock c;
  c.weight = copy_var(b.weight);
  c.gamma = copy_var(b.gamma);
  c.beta = copy_var(b.beta);
  c.stats = b.stats;
  c.stride = b.stride;
  return c;
}

void append(std::vector<NamedParam>& out, std::vector<NamedParam> more) {
  out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
}

void append(std::vector<NamedBuffer>& out, std::vector<NamedBuffer> more) {
  out.insert(out.end(), more.begin(), more.end());
}

void block_params(ConvBlock& b, const std::string& prefix, std::vector<NamedParam>& out) {
  out.push_back({prefix + ".conv.weight", b.weight});
  out.push_back({prefix + ".norm.gamma", b.gamma});
  out.push_back({prefix + ".norm.beta", b.beta});
}

void block_buffers(ConvBlock& b, const std::string& prefix, std::vector<NamedBuffer>& out) {
  out.push_back({prefix + ".norm.running_mean", &b.stats.mean});
  out.push_back({prefix + ".norm.running_var", &b.stats.var});
}

}  // namespace

void ModelConfig::validate() const {
  if (image_size < 4) throw std::invalid_argument("image_size must be at least 4");
  if (channels <= 0) throw std::invalid_argument("channels must be positive");
  if (num_classes < 2) throw std::invalid_argument("num_classes must be at least 2");
  for (int w : encoder_widths)
    if (w <= 0) throw std::invalid_argument("encoder widths must be positive");
  if (head_width <= 0) throw std::invalid_argument("head_width must be positive");
  if (!(norm_momentum >= 0.0 && norm_momentum < 1.0))
    throw std::invalid_argument("norm_momentum must be in [0, 1)");
  if (!input_mean.empty() && static_cast<int>(input_mean.size()) != channels)
    throw std::invalid_argument("input_mean must have one entry per channel");
  if (!input_std.empty() && static_cast<int>(input_std.size()) != channels)
    throw std::invalid_argument("input_std must have one entry per channel");
  for (double s : input_std)
    if (!(s > 0.0)) throw std::invalid_argument("input_std entries must be positive");
}

ModelState init_model(const ModelConfig& config, Rng& rng) {
  config.validate();
  ModelState s;
  s.config = config;

  Encoder& e = s.student.encoder;
  e.input_mean = Tensor({config.channels}, 0.0);
  e.input_std = Tensor({config.channels}, 1.0);
  for (int c = 0; c < config.channels; ++c) {
    if (!config.input_mean.empty()) e.input_mean[c] = config.input_mean[c];
    if (!config.input_std.empty()) e.input_std[c] = config.input_std[c];
  }
  const auto& w = config.encoder_widths;
  e.stages[0] = make_block(config.channels, w[0], 1, rng);
  e.stages[1] = make_block(w[0], w[1], 2, rng);
  e.stages[2] = make_block(w[1], w[2], 2, rng);

  s.student.classifier = make_head(w[2], config.head_width, config.num_classes, rng);
  for (Family f : kAllFamilies)
    s.student.decoders[static_cast<int>(f)] =
        make_head(2 * w[2], config.head_width, degrees_of_freedom(f), rng);

  s.teacher_encoder = clone(s.student.encoder);
  s.teacher_classifier = clone(s.student.classifier);
  for (auto& p : teacher_parameters(s)) p.var->requires_grad = false;

  for (const auto& p : backbone_parameters(s)) {
    s.adam.first_moment.emplace_back(p.var->value.shape(), 0.0);
    s.adam.second_moment.emplace_back(p.var->value.shape(), 0.0);
  }
  for (const auto& p : decoder_parameters(s)) s.sgd.velocity.emplace_back(p.var->value.shape(), 0.0);
  s.step = 0;
  return s;
}

Var encode(Encoder& encoder, const ModelConfig& config, const Var& images, NormMode mode,
           Tape* tape) {
  const auto& shape = images->value.shape();
  if (shape.size() != 4 || shape[1] != config.channels || shape[2] != config.image_size ||
      shape[3] != config.image_size)
    throw std::invalid_argument("encode: image batch " + images->value.shape_string() +
                                " does not match the configured input shape");
  Var x = ops::channel_affine(tape, images, encoder.input_mean, encoder.input_std);
  for (ConvBlock& stage : encoder.stages) x = block_forward(stage, config, x, mode, tape);
  return x;
}

Var classifier_logits(Head& head, const ModelConfig& config, const Var& features, NormMode mode,
                      Tape* tape) {
  if (features->value.rank() != 4 || features->value.dim(1) != config.encoder_widths[2])
    throw std::invalid_argument("classify: feature map " + features->value.shape_string() +
                                " does not match the encoder output");
  return head_forward(head, config, features, mode, tape);
}

Var classify(Head& head, const ModelConfig& config, const Var& features, NormMode mode,
             Tape* tape) {
  return ops::softmax(tape, classifier_logits(head, config, features, mode, tape));
}

Var decode_transform(Network& net, const ModelConfig& config, Family family,
                     const Var& feat_orig, const Var& feat_trans, NormMode mode, Tape* tape) {
  const int k = static_cast<int>(family);
  if (k < 0 || k >= kNumFamilies) throw std::invalid_argument("decode_transform: invalid family");
  if (!feat_orig->value.same_shape(feat_trans->value))
    throw std::invalid_argument("decode_transform: feature maps differ in shape");
  Var joint = ops::concat_channels(tape, feat_orig, feat_trans);
  return head_forward(net.decoders[k], config, joint, mode, tape);
}

std::vector<NamedParam> parameters(Encoder& encoder, const std::string& prefix) {
  std::vector<NamedParam> out;
  for (std::size_t i = 0; i < encoder.stages.size(); ++i)
    block_params(encoder.stages[i], prefix + ".stage" + std::to_string(i), out);
  return out;
}

std::vector<NamedParam> parameters(Head& head, const std::string& prefix) {
  std::vector<NamedParam> out;
  block_params(head.block, prefix + ".block", out);
  out.push_back({prefix + ".fc.weight", head.weight});
  out.push_back({prefix + ".fc.bias", head.bias});
  return out;
}

std::vector<NamedBuffer> buffers(Encoder& encoder, const std::string& prefix) {
  std::vector<NamedBuffer> out;
  out.push_back({prefix + ".input_mean", &encoder.input_mean});
  out.push_back({prefix + ".input_std", &encoder.input_std});
  for (std::size_t i = 0; i < encoder.stages.size(); ++i)
    block_buffers(encoder.stages[i], prefix + ".stage" + std::to_string(i), out);
  return out;
}

std::vector<NamedBuffer> buffers(Head& head, const std::string& prefix) {
  std::vector<NamedBuffer> out;
  block_buffers(head.block, prefix + ".block", out);
  return out;
}

std::vector<NamedParam> backbone_parameters(ModelState& s) {
  auto out = parameters(s.student.encoder, "student.encoder");
  append(out, parameters(s.student.classifier, "student.classifier"));
  return out;
}

std::vector<NamedParam> decoder_parameters(ModelState& s) {
  std::vector<NamedParam> out;
  for (Family f : kAllFamilies)
    append(out, parameters(s.student.decoders[static_cast<int>(f)],
                           "student.decoder_" + std::string(family_name(f))));
  return out;
}

std::vector<NamedParam> teacher_parameters(ModelState& s) {
  auto out = parameters(s.teacher_encoder, "teacher.encoder");
  append(out, parameters(s.teacher_classifier, "teacher.classifier"));
  return out;
}

std::vector<NamedBuffer> backbone_buffers(ModelState& s) {
  auto out = buffers(s.student.encoder, "student.encoder");
  append(out, buffers(s.student.classifier, "student.classifier"));
  return out;
}

std::vector<NamedBuffer> teacher_buffers(ModelState& s) {
  auto out = buffers(s.teacher_encoder, "teacher.encoder");
  append(out, buffers(s.teacher_classifier, "teacher.classifier"));
  return out;
}

std::vector<NamedBuffer> decoder_buffers(ModelState& s) {
  std::vector<NamedBuffer> out;
  for (Family f : kAllFamilies)
    append(out, buffers(s.student.decoders[static_cast<int>(f)],
                        "student.decoder_" + std::string(family_name(f))));
  return out;
}

std::size_t parameter_count(const std::vector<NamedParam>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.var->value.size();
  return n;
}

std::size_t parameter_count(ModelState& s) {
  return parameter_count(backbone_parameters(s)) + parameter_count(decoder_parameters(s));
}

void zero_grads(const std::vector<NamedParam>& params) {
  for (const auto& p : params) p.var->zero_grad();
}

Encoder clone(const Encoder& e) {
  Encoder c;
  for (std::size_t i = 0; i < e.stages.size(); ++i) c.stages[i] = clone_block(e.stages[i]);
  c.input_mean = e.input_mean;
  c.input_std = e.input_std;
  return c;
}

Head clone(const Head& h) {
  Head c;
  c.block = clone_block(h.block);
  c.weight = copy_var(h.weight);
  c.bias = copy_var(h.bias);
  return c;
}

ModelState clone(const ModelState& s) {
  ModelState c;
  c.config = s.config;
  c.student.encoder = clone(s.student.encoder);
  c.student.classifier = clone(s.student.classifier);
  for (int k = 0; k < kNumFamilies; ++k) c.student.decoders[k] = clone(s.student.decoders[k]);
  c.teacher_encoder = clone(s.teacher_encoder);
  c.teacher_classifier = clone(s.teacher_classifier);
  c.adam = s.adam;
  c.sgd = s.sgd;
  c.step = s.step;
  return c;
}

}  // namespace enaet
