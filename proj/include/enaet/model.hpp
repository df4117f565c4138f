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

#ifndef ENAET_MODEL_HPP
#define ENAET_MODEL_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "enaet/autograd.hpp"
#include "enaet/rng.hpp"
#include "enaet/transforms.hpp"

namespace enaet {

struct ModelConfig {
  int image_size = 32;
  int channels = 3;
  int num_classes = 4;
  /// Output widths of the three encoder stages (strides 1, 2, 2).
  std::array<int, 3> encoder_widths{16, 32, 64};
  /// Width of the conv stage shared by the classifier and decoder template.
  int head_width = 64;
  double leaky_slope = 0.1;
  double norm_momentum = 0.99;
  /// Per-channel input normalization, applied inside the encoder.
  std::vector<double> input_mean;
  std::vector<double> input_std;

  void validate() const;
};

/// conv3x3 -> batch norm -> leaky ReLU.
struct ConvBlock {
  Var weight;
  Var gamma;
  Var beta;
  RunningStats stats;
  int stride = 1;
};

struct Encoder {
  std::array<ConvBlock, 3> stages;
  Tensor input_mean;
  Tensor input_std;
};

/// Conv stage -> global average pool -> linear. Used for the classifier and,
/// with a wider input and DOF-sized output, for every transformation decoder.
struct Head {
  ConvBlock block;
  Var weight;
  Var bias;
};

struct Network {
  Encoder encoder;
  Head classifier;
  std::array<Head, kNumFamilies> decoders;
};

struct NamedParam {
  std::string name;
  Var var;
};

struct NamedBuffer {
  std::string name;
  Tensor* tensor;
};

struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

struct SgdState {
  std::vector<Tensor> velocity;
};

struct ModelState {
  ModelConfig config;
  Network student;
  /// EMA copy of the student encoder + classifier.
  Encoder teacher_encoder;
  Head teacher_classifier;
  AdamState adam;  // encoder + classifier
  SgdState sgd;    // decoders
  std::int64_t step = 0;
};

ModelState init_model(const ModelConfig& config, Rng& rng);

Var encode(Encoder& encoder, const ModelConfig& config, const Var& images, NormMode mode,
           Tape* tape);
Var classifier_logits(Head& head, const ModelConfig& config, const Var& features, NormMode mode,
                      Tape* tape);
/// Softmax class probabilities.
Var classify(Head& head, const ModelConfig& config, const Var& features, NormMode mode,
             Tape* tape);
/// Decoder `family` applied to the channel-wise concatenation
/// [feat_orig, feat_trans]; output is batch x DOF(family).
Var decode_transform(Network& net, const ModelConfig& config, Family family,
                     const Var& feat_orig, const Var& feat_trans, NormMode mode, Tape* tape);

std::vector<NamedParam> parameters(Encoder& encoder, const std::string& prefix);
std::vector<NamedParam> parameters(Head& head, const std::string& prefix);
std::vector<NamedBuffer> buffers(Encoder& encoder, const std::string& prefix);
std::vector<NamedBuffer> buffers(Head& head, const std::string& prefix);

/// Encoder + classifier parameters of the student (Adam group).
std::vector<NamedParam> backbone_parameters(ModelState& state);
/// All decoder parameters (SGD group).
std::vector<NamedParam> decoder_parameters(ModelState& state);
std::vector<NamedParam> teacher_parameters(ModelState& state);
std::vector<NamedBuffer> backbone_buffers(ModelState& state);
std::vector<NamedBuffer> teacher_buffers(ModelState& state);
std::vector<NamedBuffer> decoder_buffers(ModelState& state);

std::size_t parameter_count(const std::vector<NamedParam>& params);
std::size_t parameter_count(ModelState& state);  // student only

void zero_grads(const std::vector<NamedParam>& params);

/// Deep copy with fresh parameter nodes.
Encoder clone(const Encoder& e);
Head clone(const Head& h);
ModelState clone(const ModelState& s);

}  // namespace enaet

#endif  // ENAET_MODEL_HPP
