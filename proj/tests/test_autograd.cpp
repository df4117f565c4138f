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
#include <functional>

#include "enaet/autograd.hpp"
#include "enaet/rng.hpp"

using namespace enaet;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

using Build = std::function<Var(Tape*, const std::vector<Var>&)>;

/// Max relative error between tape gradients and central differences of a
/// scalar function of `inputs`.
double gradient_error(const Build& f, std::vector<Var> inputs, double h = 1e-6) {
  for (auto& in : inputs) in->zero_grad();
  Tape tape;
  const Var out = f(&tape, inputs);
  REQUIRE(out->value.size() == 1);
  tape.backward(out);
  double worst = 0.0;
  for (auto& in : inputs) {
    for (std::size_t j = 0; j < in->value.size(); ++j) {
      const double analytic = in->grad.empty() ? 0.0 : in->grad[j];
      const double old = in->value[j];
      in->value[j] = old + h;
      const double fp = f(nullptr, inputs)->value[0];
      in->value[j] = old - h;
      const double fm = f(nullptr, inputs)->value[0];
      in->value[j] = old;
      const double numeric = (fp - fm) / (2.0 * h);
      worst = std::max(worst, std::abs(analytic - numeric) /
                                  std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
    }
  }
  return worst;
}

/// Reduces any output to a scalar through a fixed random projection.
Var project(Tape* tape, const Var& x, std::uint64_t seed = 11) {
  Rng rng(seed);
  return ops::mean_squared_error(tape, x, random_tensor(x->value.shape(), rng));
}

}  // namespace

TEST_CASE("conv2d gradients") {
  Rng rng(1);
  for (int stride : {1, 2})
    for (int pad : {0, 1}) {
      const Var x = make_parameter(random_tensor({2, 2, 5, 5}, rng));
      const Var w = make_parameter(random_tensor({3, 2, 3, 3}, rng));
      const double err = gradient_error(
          [&](Tape* t, const std::vector<Var>& v) { return project(t, ops::conv2d(t, v[0], v[1], stride, pad)); },
          {x, w});
      CHECK(err < 1e-5);
    }
}

TEST_CASE("conv2d forward against a hand sum") {
  Tensor x({1, 1, 3, 3});
  for (int i = 0; i < 9; ++i) x[i] = i + 1;
  Tensor w({1, 1, 3, 3}, 1.0);
  const Var y = ops::conv2d(nullptr, make_constant(x), make_constant(w), 1, 1);
  REQUIRE(y->value.shape() == std::vector<int>{1, 1, 3, 3});
  CHECK(y->value[4] == 45.0);
  CHECK(y->value[0] == 1 + 2 + 4 + 5);
  const Var s = ops::conv2d(nullptr, make_constant(x), make_constant(w), 2, 1);
  CHECK(s->value.shape() == std::vector<int>{1, 1, 2, 2});
}

TEST_CASE("batch norm gradients and modes") {
  Rng rng(2);
  const Var x = make_parameter(random_tensor({3, 2, 2, 2}, rng));
  const Var g = make_parameter(random_tensor({2}, rng, 0.5, 1.5));
  const Var b = make_parameter(random_tensor({2}, rng));
  RunningStats stats{Tensor({2}, 0.0), Tensor({2}, 1.0)};
  const double err = gradient_error(
      [&](Tape* t, const std::vector<Var>& v) {
        RunningStats scratch = stats;
        return project(t, ops::batch_norm(t, v[0], v[1], v[2], scratch, NormMode::kTrainFrozen));
      },
      {x, g, b});
  CHECK(err < 1e-5);

  const double err_eval = gradient_error(
      [&](Tape* t, const std::vector<Var>& v) {
        RunningStats scratch{random_tensor({2}, rng, 0.0, 0.0), Tensor({2}, 2.0)};
        return project(t, ops::batch_norm(t, v[0], v[1], v[2], scratch, NormMode::kEval));
      },
      {x, g, b});
  CHECK(err_eval < 1e-5);

  RunningStats frozen = stats;
  ops::batch_norm(nullptr, x, g, b, frozen, NormMode::kTrainFrozen);
  CHECK(frozen.mean[0] == 0.0);
  CHECK(frozen.var[1] == 1.0);
  RunningStats live = stats;
  ops::batch_norm(nullptr, x, g, b, live, NormMode::kTrain);
  CHECK(live.mean[0] != 0.0);
}

TEST_CASE("elementwise, pooling and linear gradients") {
  Rng rng(3);
  const Var x = make_parameter(random_tensor({2, 3, 2, 2}, rng));
  CHECK(gradient_error([](Tape* t, const std::vector<Var>& v) { return project(t, ops::leaky_relu(t, v[0], 0.1)); },
                       {x}) < 1e-5);
  const Tensor shift = random_tensor({3}, rng);
  const Tensor scale = random_tensor({3}, rng, 0.5, 2.0);
  CHECK(gradient_error(
            [&](Tape* t, const std::vector<Var>& v) { return project(t, ops::channel_affine(t, v[0], shift, scale)); },
            {x}) < 1e-5);
  CHECK(gradient_error([](Tape* t, const std::vector<Var>& v) { return project(t, ops::global_avg_pool(t, v[0])); },
                       {x}) < 1e-5);

  const Var a = make_parameter(random_tensor({4, 3}, rng));
  const Var w = make_parameter(random_tensor({2, 3}, rng));
  const Var b = make_parameter(random_tensor({2}, rng));
  CHECK(gradient_error([](Tape* t, const std::vector<Var>& v) { return project(t, ops::linear(t, v[0], v[1], v[2])); },
                       {a, w, b}) < 1e-5);
}

TEST_CASE("concatenation and slicing gradients") {
  Rng rng(4);
  const Var a = make_parameter(random_tensor({2, 1, 2, 2}, rng));
  const Var b = make_parameter(random_tensor({2, 2, 2, 2}, rng));
  CHECK(gradient_error(
            [](Tape* t, const std::vector<Var>& v) { return project(t, ops::concat_channels(t, v[0], v[1])); },
            {a, b}) < 1e-5);
  const Var c = make_parameter(random_tensor({1, 2, 2, 2}, rng));
  CHECK(gradient_error(
            [](Tape* t, const std::vector<Var>& v) {
              return project(t, ops::slice_rows(t, ops::concat_rows(t, {v[0], v[1]}), 1, 2));
            },
            {b, c}) < 1e-5);
}

TEST_CASE("softmax and loss gradients") {
  Rng rng(5);
  const Var z = make_parameter(random_tensor({3, 4}, rng, -2.0, 2.0));
  Tensor target({3, 4});
  for (int r = 0; r < 3; ++r) {
    double s = 0.0;
    for (int c = 0; c < 4; ++c) s += target[r * 4 + c] = rng.uniform(0.1, 1.0);
    for (int c = 0; c < 4; ++c) target[r * 4 + c] /= s;
  }
  CHECK(gradient_error([](Tape* t, const std::vector<Var>& v) { return project(t, ops::softmax(t, v[0])); }, {z}) <
        1e-5);
  CHECK(gradient_error([&](Tape* t, const std::vector<Var>& v) { return ops::soft_cross_entropy(t, v[0], target); },
                       {z}) < 1e-5);
  CHECK(gradient_error(
            [&](Tape* t, const std::vector<Var>& v) { return ops::squared_l2_rows(t, ops::softmax(t, v[0]), target); },
            {z}) < 1e-5);
  CHECK(gradient_error(
            [&](Tape* t, const std::vector<Var>& v) { return ops::kl_divergence(t, target, ops::softmax(t, v[0])); },
            {z}) < 1e-5);
  const Var u = make_parameter(random_tensor({3, 4}, rng));
  CHECK(gradient_error(
            [&](Tape* t, const std::vector<Var>& v) {
              return ops::weighted_sum(t, {ops::mean_squared_error(t, v[0], target), project(t, v[1])}, {0.3, 2.0});
            },
            {u, z}) < 1e-5);

  const Var p = ops::softmax(nullptr, z);
  for (int r = 0; r < 3; ++r) {
    double s = 0.0;
    for (int c = 0; c < 4; ++c) s += p->value[r * 4 + c];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("tape bookkeeping") {
  Tape tape;
  const Var w = make_parameter(Tensor({1, 1}, 2.0));
  const Var b = make_parameter(Tensor({1}, 0.5));
  const Var x = make_constant(Tensor({1, 1}, 3.0));
  const Var y = ops::linear(&tape, x, w, b);
  CHECK(y->value[0] == 6.5);
  CHECK(tape.parameters_used().size() == 2);
  CHECK(tape.size() > 0);
  tape.backward(ops::mean_squared_error(&tape, y, Tensor({1, 1}, 0.0)));
  CHECK(w->grad[0] == doctest::Approx(2.0 * 6.5 * 3.0));
  CHECK(x->grad.empty());
  tape.clear();
  CHECK(tape.size() == 0);
  CHECK(tape.parameters_used().empty());
}
