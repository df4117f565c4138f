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

#ifndef ENAET_AUTOGRAD_HPP
#define ENAET_AUTOGRAD_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "enaet/tensor.hpp"

namespace enaet {

struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  bool is_parameter = false;

  Tensor& grad_buffer();
  void zero_grad() { grad = Tensor(); }
};

using Var = std::shared_ptr<Node>;

Var make_constant(Tensor value);
Var make_parameter(Tensor value);

/// Records backward closures during a forward pass and replays them in
/// reverse. Ops called with a null tape run forward only.
class Tape {
 public:
  void record(std::function<void()> backward);
  void note_parameter(const Node* p);

  /// Parameters consumed by ops, in first-use order.
  const std::vector<const Node*>& parameters_used() const { return params_used_; }

  /// Seeds d(output)/d(output) = 1 for a scalar output and propagates.
  void backward(const Var& output);
  void clear();
  std::size_t size() const { return ops_.size(); }

 private:
  std::vector<std::function<void()>> ops_;
  std::vector<const Node*> params_used_;
};

enum class NormMode {
  kTrain,        // batch statistics, running statistics updated
  kTrainFrozen,  // batch statistics, running statistics untouched
  kEval,         // running statistics
};

struct RunningStats {
  Tensor mean;
  Tensor var;
};

namespace ops {

/// x: N x C x H x W, w: O x C x k x k, zero padding `pad`.
Var conv2d(Tape* tape, const Var& x, const Var& w, int stride, int pad);
Var batch_norm(Tape* tape, const Var& x, const Var& gamma, const Var& beta, RunningStats& stats,
               NormMode mode, double momentum = 0.99, double eps = 1e-5);
Var leaky_relu(Tape* tape, const Var& x, double slope);
/// Per-channel affine map (x - shift) / scale with constants.
Var channel_affine(Tape* tape, const Var& x, const Tensor& shift, const Tensor& scale);
/// N x C x H x W -> N x C.
Var global_avg_pool(Tape* tape, const Var& x);
/// x: N x D, w: O x D, b: O.
Var linear(Tape* tape, const Var& x, const Var& w, const Var& b);
Var concat_channels(Tape* tape, const Var& a, const Var& b);
Var concat_rows(Tape* tape, const std::vector<Var>& parts);
Var slice_rows(Tape* tape, const Var& x, int begin, int count);
Var softmax(Tape* tape, const Var& logits);

/// Mean over rows of -sum_c target_c * log softmax(logits)_c.
Var soft_cross_entropy(Tape* tape, const Var& logits, const Tensor& targets);
/// Mean over rows of sum_c (probs_c - targets_c)^2.
Var squared_l2_rows(Tape* tape, const Var& probs, const Tensor& targets);
/// Mean over all elements of (pred - target)^2.
Var mean_squared_error(Tape* tape, const Var& pred, const Tensor& target);
/// Mean over rows of KL(target || probs), probs floored at `floor`.
Var kl_divergence(Tape* tape, const Tensor& target, const Var& probs, double floor = 1e-8);
/// sum_i weights[i] * terms[i] for scalar terms.
Var weighted_sum(Tape* tape, const std::vector<Var>& terms, const std::vector<double>& weights);

}  // namespace ops

}  // namespace enaet

#endif  // ENAET_AUTOGRAD_HPP
