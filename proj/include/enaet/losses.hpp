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

#ifndef ENAET_LOSSES_HPP
#define ENAET_LOSSES_HPP

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "enaet/transforms.hpp"

namespace enaet {

inline constexpr double kProbabilityFloor = 1e-8;

/// Mean squared error over all components.
double aet_loss(std::span<const double> pred, std::span<const double> target);

/// p_i^(1/T), renormalized.
std::vector<double> sharpen(std::span<const double> p, double temperature);

/// KL(p_target || p_trans) with p_trans floored at kProbabilityFloor.
double consistency_loss(std::span<const double> p_target, std::span<const double> p_trans);

/// H(target, pred) = -sum target * log(pred), pred floored.
double cross_entropy(std::span<const double> target, std::span<const double> pred);
/// sum_i (a_i - b_i)^2.
double squared_l2(std::span<const double> a, std::span<const double> b);
double entropy(std::span<const double> p);
bool on_simplex(std::span<const double> p, double tol = 1e-6);

struct LossWeights {
  double lambda_u = 0.0;
  std::array<double, kNumFamilies> lambda_aet{};
  double gamma = 0.0;
};

struct LossBreakdown {
  double l_labeled = 0.0;
  double l_unlabeled = 0.0;
  std::array<double, kNumFamilies> l_aet{};
  std::array<double, kNumFamilies> l_cl{};
  LossWeights weights_applied;
  double total = 0.0;
};

/// Thrown when a loss term is NaN or infinite; names the offending term.
class NonFiniteLoss : public std::runtime_error {
 public:
  explicit NonFiniteLoss(const std::string& term)
      : std::runtime_error("non-finite loss term: " + term), term_(term) {}
  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

/// l_labeled + lambda_u * l_unlabeled + sum_k lambda_k * l_aet[k]
/// + gamma * sum_k l_cl[k]. Throws NonFiniteLoss for NaN/Inf terms.
LossBreakdown total_loss(const LossBreakdown& terms, const LossWeights& weights);

/// Name of the first non-finite term, or empty.
std::string first_non_finite_term(const LossBreakdown& terms);

/// Flat weight vector matching the term order
/// [labeled, unlabeled, aet x5, cl x5].
std::vector<double> flat_weights(const LossWeights& w);

}  // namespace enaet

#endif  // ENAET_LOSSES_HPP
