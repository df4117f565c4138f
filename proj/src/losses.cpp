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

#include "enaet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace enaet {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* op) {
  if (a.size() != b.size())
    throw std::invalid_argument(std::string(op) + ": length mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
}

}  // namespace

double aet_loss(std::span<const double> pred, std::span<const double> target) {
  require_same_length(pred, target, "aet_loss");
  if (pred.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - target[i]) * (pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

std::vector<double> sharpen(std::span<const double> p, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("sharpen: temperature must be positive");
  std::vector<double> out(p.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (out[i] = std::pow(p[i], 1.0 / temperature));
  if (!(s > 0.0)) throw std::domain_error("sharpen: distribution vanished");
  for (double& v : out) v /= s;
  return out;
}

bool on_simplex(std::span<const double> p, double tol) {
  double s = 0.0;
  for (double v : p) {
    if (!(v >= -tol)) return false;
    s += v;
  }
  return std::abs(s - 1.0) <= tol;
}

double consistency_loss(std::span<const double> p_target, std::span<const double> p_trans) {
  require_same_length(p_target, p_trans, "consistency_loss");
  if (!on_simplex(p_target) || !on_simplex(p_trans))
    throw std::invalid_argument("consistency_loss: inputs must be probability vectors");
  double kl = 0.0;
  for (std::size_t i = 0; i < p_target.size(); ++i) {
    if (p_target[i] <= 0.0) continue;
    kl += p_target[i] * (std::log(p_target[i]) - std::log(std::max(p_trans[i], kProbabilityFloor)));
  }
  return std::max(kl, 0.0);
}

double cross_entropy(std::span<const double> target, std::span<const double> pred) {
  require_same_length(target, pred, "cross_entropy");
  double h = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i)
    if (target[i] > 0.0) h -= target[i] * std::log(std::max(pred[i], kProbabilityFloor));
  return h;
}

double squared_l2(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b, "squared_l2");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double entropy(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

std::string first_non_finite_term(const LossBreakdown& t) {
  if (!std::isfinite(t.l_labeled)) return "l_labeled";
  if (!std::isfinite(t.l_unlabeled)) return "l_unlabeled";
  for (Family f : kAllFamilies) {
    const int k = static_cast<int>(f);
    if (!std::isfinite(t.l_aet[k])) return "l_aet_" + std::string(family_name(f));
    if (!std::isfinite(t.l_cl[k])) return "l_cl_" + std::string(family_name(f));
  }
  return {};
}

LossBreakdown total_loss(const LossBreakdown& terms, const LossWeights& w) {
  if (auto bad = first_non_finite_term(terms); !bad.empty()) throw NonFiniteLoss(bad);
  LossBreakdown out = terms;
  out.weights_applied = w;
  double total = terms.l_labeled + w.lambda_u * terms.l_unlabeled;
  for (int k = 0; k < kNumFamilies; ++k) total += w.lambda_aet[k] * terms.l_aet[k];
  double cl = 0.0;
  for (int k = 0; k < kNumFamilies; ++k) cl += terms.l_cl[k];
  out.total = total + w.gamma * cl;
  if (!std::isfinite(out.total)) throw NonFiniteLoss("total");
  return out;
}

std::vector<double> flat_weights(const LossWeights& w) {
  std::vector<double> out{1.0, w.lambda_u};
  out.insert(out.end(), w.lambda_aet.begin(), w.lambda_aet.end());
  for (int k = 0; k < kNumFamilies; ++k) out.push_back(w.gamma);
  return out;
}

}  // namespace enaet
