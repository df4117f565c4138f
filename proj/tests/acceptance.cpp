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

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <set>
#include <string>

#include <Eigen/LU>

#include "enaet/experiment.hpp"
#include "enaet/losses.hpp"
#include "enaet/transforms.hpp"
#include "fixtures.hpp"
#include "test_util.hpp"

using namespace enaet;
using namespace enaet::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

constexpr SpatialKind kSpatialKinds[] = {SpatialKind::Projective, SpatialKind::Affine,
                                         SpatialKind::Similarity, SpatialKind::Euclidean};

Eigen::Vector2d random_point(Rng& rng) { return {rng.uniform(-1, 1), rng.uniform(-1, 1)}; }

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

Outcome transform_algebra() {
  constexpr int kSamples = 1000;
  Rng rng(101);
  int failures = 0;
  double worst_iso = 0.0, worst_par = 0.0, worst_col = 0.0, worst_inv = 0.0, worst_target = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    for (SpatialKind kind : kSpatialKinds) {
      const auto t = sample_spatial(kind, rng);
      for (SpatialKind wider : kSpatialKinds)
        if (static_cast<int>(wider) <= static_cast<int>(kind) && !satisfies(wider, t.matrix)) ++failures;
      if (classify(t.matrix) != kind) ++failures;
      if (t.matrix(2, 2) != 1.0) ++failures;

      const auto c = compose(t, invert(t));
      worst_inv = std::max(worst_inv, (c.matrix - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff());

      if (kind == SpatialKind::Euclidean) {
        const Eigen::Vector2d p1 = random_point(rng), p2 = random_point(rng);
        worst_iso = std::max(worst_iso, std::abs((p1 - p2).norm() - (t.apply(p1) - t.apply(p2)).norm()));
      }
      if (kind != SpatialKind::Projective) {
        const Eigen::Vector2d b1 = random_point(rng), b2 = random_point(rng), dir = random_point(rng);
        const Eigen::Vector2d u = t.apply(b1 + dir) - t.apply(b1);
        const Eigen::Vector2d v = t.apply(b2 + 0.5 * dir) - t.apply(b2);
        worst_par = std::max(worst_par, std::abs(u.x() * v.y() - u.y() * v.x()));
      }
      const Eigen::Vector2d q1 = random_point(rng), q2 = random_point(rng);
      const Eigen::Vector2d q3 = q1 + rng.uniform(-1, 1) * (q2 - q1);
      const Eigen::Vector2d r1 = t.apply(q1), r2 = t.apply(q2), r3 = t.apply(q3);
      worst_col = std::max(worst_col, 0.5 * std::abs((r2 - r1).x() * (r3 - r1).y() - (r2 - r1).y() * (r3 - r1).x()));

      const auto back = params_from_target(to_family(kind), target_vector(t));
      for (std::size_t k = 0; k < t.params.size(); ++k)
        worst_target = std::max(worst_target, std::abs(back[k] - t.params[k]));
    }
    const auto ccbs = sample_ccbs(rng);
    const auto arr = ccbs.as_array();
    const auto back = params_from_target(Family::Ccbs, target_vector(ccbs));
    for (std::size_t k = 0; k < 4; ++k) worst_target = std::max(worst_target, std::abs(back[k] - arr[k]));
  }
  const bool pass = failures == 0 && worst_iso < 1e-9 && worst_par < 1e-9 && worst_col < 1e-8 &&
                    worst_inv < 1e-9 && worst_target < 1e-9;
  return {pass, fmt("%.0f samples/family, isometry %.1e, parallel %.1e, collinear %.1e", kSamples, worst_iso,
                    worst_par, worst_col) +
                    fmt(", compose/invert %.1e, target round trip %.1e", worst_inv, worst_target) +
                    (failures ? ", hierarchy failures " + std::to_string(failures) : "")};
}

Outcome warp_correctness() {
  Rng rng(202);
  const Image noise = random_image(13, 17, 3, rng);
  bool identity_exact = true;
  for (SpatialKind kind : kSpatialKinds)
    identity_exact = identity_exact && warp(noise, identity_transform(kind)).pixels == noise.pixels;
  const Image img = smooth_image(32, 3);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto t = sample_spatial(kSpatialKinds[i % 4], rng);
    const Image back = warp(warp(img, t), invert(t));
    double sum = 0.0;
    int n = 0;
    for (int y = 8; y < 24; ++y)
      for (int x = 8; x < 24; ++x)
        for (int c = 0; c < 3; ++c, ++n) sum += std::abs(back.at(y, x, c) - img.at(y, x, c));
    worst = std::max(worst, sum / n);
  }
  return {identity_exact && worst < 0.05,
          std::string("identity ") + (identity_exact ? "exact" : "NOT exact") +
              fmt(", worst central-crop MAE %.4f over 50 transforms", worst)};
}

Outcome loss_analytics() {
  double worst = 0.0;
  auto check = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
  check(consistency_loss(std::vector<double>{1.0, 0.0}, std::vector<double>{0.5, 0.5}), std::numbers::ln2);
  const double kl = consistency_loss(std::vector<double>{0.5, 0.5}, std::vector<double>{0.25, 0.75});
  check(kl, 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0));
  const auto s = sharpen(std::vector<double>{0.5, 0.25, 0.25}, 0.5);
  check(s[0], 2.0 / 3.0);
  check(s[1], 1.0 / 6.0);
  check(s[2], 1.0 / 6.0);
  Tensor teacher({1}, 1.0);
  ema_update(teacher, Tensor({1}, 0.0), 0.999);
  check(1.0 - teacher[0], 0.001);
  const bool rounded = std::abs(kl - 0.1438) < 5e-5;
  return {worst < 1e-9 && rounded, fmt("max deviation %.1e, KL case %.6f", worst, kl)};
}

Outcome gradient_check() {
  const GradCheck g = full_loss_gradient_check(3, 50);
  return {g.parameters <= 2000 && g.coordinates == 50 && g.max_relative_error < 1e-4,
          fmt("%.0f parameters, %.0f coordinates, max relative error %.2e", static_cast<double>(g.parameters),
              g.coordinates, g.max_relative_error)};
}

Outcome zero_weight_equivalence() {
  const DatasetSplit data = tiny_split(6);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  cfg.steps_per_epoch = 50;
  cfg.lambda_k = {0.0, 0.0, 0.0, 0.0, 0.0};
  cfg.gamma = 0.0;
  TrainConfig baseline = cfg;
  baseline.regularizers = false;
  TrainResult a = train(cfg, data);
  TrainResult b = train(baseline, data);
  const double diff = max_snapshot_diff(backbone_snapshot(a.state), backbone_snapshot(b.state));
  return {a.state.step == 50 && diff <= 1e-10, fmt("%.0f steps, max parameter difference %.1e",
                                                   static_cast<double>(a.state.step), diff)};
}

struct ToyRuns {
  std::vector<ExperimentSummary> rows;  // full, no_cl, no_aet, ssl_only
  double full_seconds = 0.0;
};

ToyRuns toy_runs() {
  const TrainConfig cfg = resolve_config(std::filesystem::path(ENAET_TOY_CONFIG), {});
  SyntheticConfig sc;
  sc.image_size = 16;
  Rng rng = Rng::derive(0, 0);
  const FullDataset full = make_synthetic_full(sc, rng);
  const auto seeds = parse_seeds("5", cfg.seed);
  ToyRuns out;
  for (const char* slug : {"full", "no_cl", "no_aet", "ssl_only"}) {
    for (const auto& row : ablation_rows()) {
      if (row.slug != slug) continue;
      TrainConfig run_cfg = cfg;
      apply_ablation(run_cfg, row.ablation);
      const auto t0 = std::chrono::steady_clock::now();
      out.rows.push_back(run_experiment(row.label, run_cfg, full, seeds, {}, [](const std::string& s) {
        std::printf("  %s\n", s.c_str());
        std::fflush(stdout);
      }));
      if (out.rows.size() == 1)
        out.full_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  }
  return out;
}

Outcome toy_learning(const ToyRuns& runs) {
  const auto errs = runs.rows[0].last_k_errors();
  const MeanStd ms = mean_std(errs);
  const MeanStd fin = mean_std(runs.rows[0].final_teacher_errors());
  const double per_run_minutes = runs.full_seconds / 60.0 / static_cast<double>(errs.size());
  return {errs.size() == 5 && ms.mean <= 0.15 && per_run_minutes < 10.0,
          fmt("teacher error (last K) %.4f, final %.4f, 5 seeds, %.1f min per run", ms.mean, fin.mean,
              per_run_minutes)};
}

Outcome ablation_direction(const ToyRuns& runs) {
  std::vector<double> mean, se;
  for (const auto& row : runs.rows) {
    const auto errs = row.last_k_errors();
    mean.push_back(mean_std(errs).mean);
    se.push_back(standard_error(errs));
  }
  const double margin = mean[3] - mean[0];
  const double margin_se = std::sqrt(se[0] * se[0] + se[3] * se[3]);
  const bool ordered = mean[0] <= mean[1] && mean[1] <= mean[2];
  return {ordered && margin > margin_se,
          fmt("full %.4f, no CL %.4f, no AET %.4f, SSL-only %.4f", mean[0], mean[1], mean[2], mean[3]) +
              fmt("; SSL-only minus full %.4f vs standard error %.4f", margin, margin_se)};
}

Outcome reproducibility() {
  const DatasetSplit data = tiny_split(8);
  TrainConfig cfg = tiny_config();
  cfg.epochs = 3;
  auto lines = [](const TrainResult& r) {
    std::vector<std::string> out;
    for (const auto& rec : r.log) out.push_back(rec.to_json(false));
    return out;
  };
  TrainResult a = train(cfg, data);
  TrainResult b = train(cfg, data);
  const bool streams = lines(a) == lines(b);

  const auto dir = std::filesystem::temp_directory_path() / "enaet_acceptance_resume";
  std::filesystem::remove_all(dir);
  TrainOptions first;
  first.out_dir = dir;
  first.stop_after_epoch = 1;
  train(cfg, data, first);
  TrainOptions second;
  second.out_dir = dir;
  second.resume_from = dir / "last.ckpt";
  TrainResult resumed = train(cfg, data, second);
  std::filesystem::remove_all(dir);
  const double diff = max_snapshot_diff(full_snapshot(a.state), full_snapshot(resumed.state));
  return {streams && diff == 0.0, std::string("metrics streams ") + (streams ? "identical" : "DIFFER") +
                                      fmt(", resume max parameter difference %.1e", diff)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  auto wanted = [&](int n) { return only.empty() || only.count(n) > 0; };

  int failed = 0;
  auto report = [&](int n, const char* name, const std::function<Outcome()>& fn) {
    if (!wanted(n)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += o.pass ? 0 : 1;
    std::printf("criterion %d %s: %s (%s; %.1f s)\n", n, name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  };

  report(1, "transform algebra", transform_algebra);
  report(2, "warp correctness", warp_correctness);
  report(3, "loss analytics", loss_analytics);
  report(4, "gradient check", gradient_check);
  report(5, "zero-weight equivalence", zero_weight_equivalence);
  if (wanted(6) || wanted(7)) {
    ToyRuns runs;
    report(6, "toy-task learning", [&] {
      runs = toy_runs();
      return toy_learning(runs);
    });
    report(7, "ablation direction", [&] {
      if (runs.rows.size() != 4) runs = toy_runs();
      return ablation_direction(runs);
    });
  }
  report(8, "reproducibility", reproducibility);
  return failed == 0 ? 0 : 1;
}
