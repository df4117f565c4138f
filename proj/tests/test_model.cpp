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

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "enaet/autograd.hpp"
#include "enaet/model.hpp"
#include "enaet/transforms.hpp"
#include "test_util.hpp"

using namespace enaet;
using enaet::testing::random_image;

namespace {

ModelConfig small_config() {
  ModelConfig mc;
  mc.image_size = 8;
  mc.channels = 3;
  mc.num_classes = 4;
  mc.encoder_widths = {4, 6, 8};
  mc.head_width = 5;
  mc.input_mean = {0.4, 0.5, 0.6};
  mc.input_std = {0.2, 0.25, 0.3};
  return mc;
}

Var batch_of(const std::vector<Image>& imgs) {
  return make_constant(to_batch(std::span<const Image>(imgs)));
}

bool all_finite(const Tensor& t) {
  return std::all_of(t.data(), t.data() + t.size(), [](double v) { return std::isfinite(v); });
}

}  // namespace

TEST_CASE("init_model") {
  const ModelConfig mc = small_config();
  Rng a(1), b(1);
  ModelState s1 = init_model(mc, a);
  ModelState s2 = init_model(mc, b);

  const auto p1 = backbone_parameters(s1);
  const auto p2 = backbone_parameters(s2);
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i].var->value.values().size() == p2[i].var->value.values().size());
  for (std::size_t i = 0; i < p1.size(); ++i)
    CHECK(std::equal(p1[i].var->value.data(), p1[i].var->value.data() + p1[i].var->value.size(),
                     p2[i].var->value.data()));

  const auto teacher = teacher_parameters(s1);
  REQUIRE(teacher.size() == p1.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    CHECK(teacher[i].var->value.same_shape(p1[i].var->value));
    CHECK(std::equal(teacher[i].var->value.data(), teacher[i].var->value.data() + teacher[i].var->value.size(),
                     p1[i].var->value.data()));
    CHECK(teacher[i].var.get() != p1[i].var.get());
    CHECK_FALSE(teacher[i].var->requires_grad);
  }
  for (const auto& t : s1.adam.first_moment)
    CHECK(std::all_of(t.data(), t.data() + t.size(), [](double v) { return v == 0.0; }));
  CHECK(s1.step == 0);

  // Shape arithmetic: convs carry no bias, each normalization has scale + shift.
  const int c = mc.channels, w0 = 4, w1 = 6, w2 = 8, h = mc.head_width, k = mc.num_classes;
  std::size_t expect = 9 * (c * w0 + w0 * w1 + w1 * w2) + 2 * (w0 + w1 + w2);
  expect += 9 * w2 * h + 2 * h + h * k + k;
  for (Family f : kAllFamilies) {
    const int dof = degrees_of_freedom(f);
    expect += 9 * 2 * w2 * h + 2 * h + h * dof + dof;
  }
  CHECK(parameter_count(s1) == expect);

  ModelConfig bad = mc;
  bad.num_classes = 1;
  Rng r(2);
  CHECK_THROWS_AS(init_model(bad, r), std::invalid_argument);
}

TEST_CASE("encode determinism, batch independence and finiteness") {
  const ModelConfig mc = small_config();
  Rng rng(3);
  ModelState s = init_model(mc, rng);
  // Non-trivial running statistics.
  for (int i = 0; i < 3; ++i) {
    std::vector<Image> imgs;
    for (int j = 0; j < 8; ++j) imgs.push_back(random_image(8, 8, 3, rng));
    encode(s.student.encoder, mc, batch_of(imgs), NormMode::kTrain, nullptr);
  }

  std::vector<Image> imgs;
  for (int j = 0; j < 8; ++j) imgs.push_back(random_image(8, 8, 3, rng));
  const Tensor f1 = encode(s.student.encoder, mc, batch_of(imgs), NormMode::kEval, nullptr)->value;
  const Tensor f2 = encode(s.student.encoder, mc, batch_of(imgs), NormMode::kEval, nullptr)->value;
  CHECK(std::equal(f1.data(), f1.data() + f1.size(), f2.data()));

  const Tensor single =
      encode(s.student.encoder, mc, batch_of({imgs[3]}), NormMode::kEval, nullptr)->value;
  const std::size_t row = single.size();
  for (std::size_t i = 0; i < row; ++i) CHECK(std::abs(single[i] - f1[3 * row + i]) < 1e-6);

  const Image zero(8, 8, 3, 0.0);
  for (NormMode mode : {NormMode::kEval, NormMode::kTrainFrozen}) {
    Var f = encode(s.student.encoder, mc, batch_of({zero, zero}), mode, nullptr);
    CHECK(all_finite(f->value));
    CHECK(all_finite(classifier_logits(s.student.classifier, mc, f, mode, nullptr)->value));
  }

  CHECK_THROWS_AS(encode(s.student.encoder, mc, batch_of({random_image(6, 6, 3, rng)}),
                         NormMode::kEval, nullptr),
                  std::invalid_argument);
}

TEST_CASE("classify outputs") {
  const ModelConfig mc = small_config();
  Rng rng(4);
  ModelState s = init_model(mc, rng);
  std::vector<Image> imgs;
  for (int j = 0; j < 5; ++j) imgs.push_back(random_image(8, 8, 3, rng));
  Var feats = encode(s.student.encoder, mc, batch_of(imgs), NormMode::kTrainFrozen, nullptr);
  Var probs = classify(s.student.classifier, mc, feats, NormMode::kTrainFrozen, nullptr);
  for (int r = 0; r < 5; ++r) {
    double sum = 0.0;
    for (int c = 0; c < 4; ++c) {
      CHECK(probs->value.data()[4 * r + c] >= 0.0);
      sum += probs->value.data()[4 * r + c];
    }
    CHECK(std::abs(sum - 1.0) < 1e-6);
  }

  s.student.classifier.weight->value.fill(0.0);
  s.student.classifier.bias->value.fill(0.0);
  Var uniform = classify(s.student.classifier, mc, feats, NormMode::kTrainFrozen, nullptr);
  for (std::size_t i = 0; i < uniform->value.size(); ++i) CHECK(uniform->value[i] == doctest::Approx(0.25));

  Tensor logits({2, 4});
  const double raw[] = {0.3, 2.0, -1.0, 0.5, -0.2, -0.1, 1.7, 1.6};
  std::copy(raw, raw + 8, logits.data());
  Tensor shifted = logits;
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += 17.5;
  const Tensor pa = ops::softmax(nullptr, make_constant(logits))->value;
  const Tensor pb = ops::softmax(nullptr, make_constant(shifted))->value;
  for (int r = 0; r < 2; ++r)
    CHECK(std::max_element(pa.data() + 4 * r, pa.data() + 4 * r + 4) - (pa.data() + 4 * r) ==
          std::max_element(pb.data() + 4 * r, pb.data() + 4 * r + 4) - (pb.data() + 4 * r));
}

TEST_CASE("decoders") {
  const ModelConfig mc = small_config();
  Rng rng(5);
  ModelState s = init_model(mc, rng);
  std::vector<Image> a, b;
  for (int j = 0; j < 4; ++j) {
    a.push_back(random_image(8, 8, 3, rng));
    b.push_back(random_image(8, 8, 3, rng));
  }
  Var fa = encode(s.student.encoder, mc, batch_of(a), NormMode::kTrainFrozen, nullptr);
  Var fb = encode(s.student.encoder, mc, batch_of(b), NormMode::kTrainFrozen, nullptr);
  for (Family f : kAllFamilies) {
    Var out = decode_transform(s.student, mc, f, fa, fb, NormMode::kTrainFrozen, nullptr);
    CHECK(out->value.dim(0) == 4);
    CHECK(out->value.dim(1) == degrees_of_freedom(f));
    Var swapped = decode_transform(s.student, mc, f, fb, fa, NormMode::kTrainFrozen, nullptr);
    double diff = 0.0;
    for (std::size_t i = 0; i < out->value.size(); ++i) diff += std::abs(out->value[i] - swapped->value[i]);
    CHECK(diff > 1e-6);
  }
  CHECK(decode_transform(s.student, mc, Family::Projective, fa, fb, NormMode::kEval, nullptr)->value.dim(1) == 8);
  CHECK(decode_transform(s.student, mc, Family::Euclidean, fa, fb, NormMode::kEval, nullptr)->value.dim(1) == 3);
  CHECK_THROWS_AS(decode_transform(s.student, mc, static_cast<Family>(7), fa, fb, NormMode::kEval, nullptr),
                  std::invalid_argument);

  // One template: identical shapes apart from the output width.
  const auto& d0 = s.student.decoders[0];
  for (const auto& d : s.student.decoders) {
    CHECK(d.block.weight->value.same_shape(d0.block.weight->value));
    CHECK(d.weight->value.dim(1) == d0.weight->value.dim(1));
  }
}

TEST_CASE("siamese encoder shares parameter objects") {
  const ModelConfig mc = small_config();
  Rng rng(6);
  ModelState s = init_model(mc, rng);
  std::vector<Image> x{random_image(8, 8, 3, rng), random_image(8, 8, 3, rng)};
  std::vector<Image> tx;
  for (const auto& img : x) tx.push_back(warp(img, sample_spatial(SpatialKind::Affine, rng)));
  Tape t1, t2;
  encode(s.student.encoder, mc, batch_of(x), NormMode::kTrain, &t1);
  encode(s.student.encoder, mc, batch_of(tx), NormMode::kTrain, &t2);
  REQUIRE_FALSE(t1.parameters_used().empty());
  CHECK(t1.parameters_used() == t2.parameters_used());
}

TEST_CASE("clone is deep") {
  Rng rng(7);
  ModelState s = init_model(small_config(), rng);
  ModelState c = clone(s);
  const auto ps = backbone_parameters(s);
  const auto pc = backbone_parameters(c);
  for (std::size_t i = 0; i < ps.size(); ++i) CHECK(ps[i].var.get() != pc[i].var.get());
  pc[0].var->value[0] += 1.0;
  CHECK(ps[0].var->value[0] != pc[0].var->value[0]);
}
