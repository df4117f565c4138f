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
#include <filesystem>
#include <set>

#include "enaet/data.hpp"
#include "enaet/png_io.hpp"
#include "test_util.hpp"

using namespace enaet;
using enaet::testing::random_image;

namespace {

FullDataset labeled_pool(int classes, int per_class, Rng& rng) {
  FullDataset full;
  full.num_classes = classes;
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < per_class; ++i) full.train.push_back({random_image(2, 2, 1, rng), c});
  rng.shuffle(full.train);
  full.test.push_back({random_image(2, 2, 1, rng), 0});
  return full;
}

std::vector<int> class_counts(const DatasetSplit& s) {
  std::vector<int> counts(s.num_classes, 0);
  for (const auto& item : s.labeled) ++counts[item.label];
  return counts;
}

/// Per-image standardized grayscale.
std::vector<double> gray_profile(const Image& img) {
  std::vector<double> g(static_cast<std::size_t>(img.height) * img.width, 0.0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double s = 0.0;
      for (int c = 0; c < img.channels; ++c) s += img.at(y, x, c);
      g[static_cast<std::size_t>(y) * img.width + x] = s / img.channels;
    }
  double mean = 0.0, var = 0.0;
  for (double v : g) mean += v;
  mean /= static_cast<double>(g.size());
  for (double v : g) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(g.size())) + 1e-12;
  for (double& v : g) v = (v - mean) / sd;
  return g;
}

double nearest_class_mean_accuracy(const FullDataset& full) {
  const std::size_t n = gray_profile(full.train[0].image).size();
  std::vector<std::vector<double>> means(full.num_classes, std::vector<double>(n, 0.0));
  std::vector<int> counts(full.num_classes, 0);
  for (const auto& item : full.train) {
    const auto g = gray_profile(item.image);
    for (std::size_t i = 0; i < n; ++i) means[item.label][i] += g[i];
    ++counts[item.label];
  }
  for (int c = 0; c < full.num_classes; ++c)
    for (double& v : means[c]) v /= counts[c];
  int correct = 0;
  for (const auto& item : full.test) {
    const auto g = gray_profile(item.image);
    int best = 0;
    double best_d = 1e300;
    for (int c = 0; c < full.num_classes; ++c) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += (g[i] - means[c][i]) * (g[i] - means[c][i]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    correct += best == item.label;
  }
  return static_cast<double>(correct) / static_cast<double>(full.test.size());
}

}  // namespace

TEST_CASE("split_labels examples") {
  Rng rng(1);
  const FullDataset ten = labeled_pool(10, 30, rng);
  const DatasetSplit s = split_labels(ten, 250, 7);
  CHECK(s.labeled.size() == 250);
  CHECK(s.unlabeled.size() == 50);
  for (int c : class_counts(s)) CHECK(c == 25);

  const DatasetSplit all = split_labels(ten, static_cast<int>(ten.train.size()), 7);
  CHECK(all.unlabeled.empty());
  CHECK(all.labeled.size() == ten.train.size());

  const DatasetSplit again = split_labels(ten, 250, 7);
  CHECK(again.labeled_indices == s.labeled_indices);
  const DatasetSplit other = split_labels(ten, 250, 8);
  CHECK(other.labeled_indices != s.labeled_indices);

  CHECK_THROWS_AS(split_labels(ten, 9, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_labels(ten, 301, 1), std::invalid_argument);
}

TEST_CASE("split_labels balance and disjointness over a grid") {
  Rng rng(2);
  const FullDataset full = labeled_pool(4, 20, rng);
  for (int n : {4, 5, 7, 10, 40, 41, 43, 79, 80}) {
    for (std::uint64_t seed : {0ull, 1ull, 2ull, 99ull}) {
      const DatasetSplit s = split_labels(full, n, seed);
      CHECK(s.labeled.size() == static_cast<std::size_t>(n));
      CHECK(s.labeled.size() + s.unlabeled.size() == full.train.size());
      const std::set<std::size_t> unique(s.labeled_indices.begin(), s.labeled_indices.end());
      CHECK(unique.size() == s.labeled_indices.size());
      for (int c : class_counts(s)) {
        CHECK(c >= n / 4);
        CHECK(c <= n / 4 + 1);
      }
      CHECK(s.test.size() == full.test.size());
      CHECK(s.metadata.channel_mean.size() == 1);
    }
  }
}

TEST_CASE("standard augmentation") {
  Rng rng(3);
  const Image img = random_image(9, 11, 3, rng);
  CHECK(shift_and_flip(img, false, 0, 0).pixels == img.pixels);
  CHECK(hflip(hflip(img)).pixels == img.pixels);
  CHECK(shift_and_flip(shift_and_flip(img, true, 0, 0), true, 0, 0).pixels == img.pixels);
  for (int i = 0; i < 100; ++i) {
    const Image out = standard_augment(img, rng, 4);
    CHECK(out.same_shape(img));
    for (double v : out.pixels) CHECK((v >= 0.0 && v <= 1.0));
  }
  // Reflection padding: a one-pixel shift keeps every value drawn from the source.
  const Image shifted = shift_and_flip(img, false, 1, 0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 1; x < img.width; ++x)
      CHECK(shifted.at(y, x, 0) == img.at(y, x - 1, 0));
}

TEST_CASE("synthetic data is learnable by nearest class mean") {
  for (int size : {16, 32}) {
    SyntheticConfig sc;
    sc.image_size = size;
    Rng rng(4);
    const FullDataset full = make_synthetic_full(sc, rng);
    CHECK(full.num_classes == 4);
    CHECK(full.train.size() == 400);
    CHECK(full.test.size() == 200);
    CHECK(nearest_class_mean_accuracy(full) >= 0.8);
  }
}

TEST_CASE("synthetic data determinism and ranges") {
  SyntheticConfig sc;
  sc.image_size = 16;
  sc.num_classes = 6;
  sc.train_per_class = 5;
  sc.test_per_class = 2;
  sc.labels_per_class = 2;
  Rng a(5), b(5);
  const DatasetSplit s1 = make_synthetic(sc, a);
  const DatasetSplit s2 = make_synthetic(sc, b);
  REQUIRE(s1.unlabeled.size() == s2.unlabeled.size());
  for (std::size_t i = 0; i < s1.unlabeled.size(); ++i) CHECK(s1.unlabeled[i].pixels == s2.unlabeled[i].pixels);
  for (std::size_t i = 0; i < s1.labeled.size(); ++i) CHECK(s1.labeled[i].image.pixels == s2.labeled[i].image.pixels);
  CHECK(s1.labeled.size() == 12);
  for (const auto& item : s1.test)
    for (double v : item.image.pixels) CHECK((v >= 0.0 && v <= 1.0));

  SyntheticConfig bad = sc;
  bad.num_classes = 7;
  Rng r(1);
  CHECK_THROWS_AS(make_synthetic(bad, r), std::invalid_argument);
  bad = sc;
  bad.image_size = 0;
  CHECK_THROWS_AS(make_synthetic(bad, r), std::invalid_argument);
}

TEST_CASE("synthetic shapes stay inside the frame under the transform ranges") {
  // Foreground extent e (normalized units, per axis) survives scale 1.2 and
  // translation 0.2 when 1.2 e + 0.2 <= 1.
  SyntheticConfig sc;
  sc.image_size = 32;
  sc.train_per_class = 50;
  sc.test_per_class = 1;
  Rng rng(6);
  const FullDataset full = make_synthetic_full(sc, rng);
  double extent = 0.0;
  for (const auto& item : full.train) {
    const Image& img = item.image;
    std::vector<double> bg(img.channels);
    for (int c = 0; c < img.channels; ++c)
      bg[c] = (img.at(0, 0, c) + img.at(0, 31, c) + img.at(31, 0, c) + img.at(31, 31, c)) / 4.0;
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        double dev = 0.0;
        for (int c = 0; c < img.channels; ++c) dev += std::abs(img.at(y, x, c) - bg[c]);
        if (dev / img.channels <= 0.15) continue;
        extent = std::max({extent, std::abs(pixel_to_normalized(x, 32)),
                           std::abs(pixel_to_normalized(y, 32))});
      }
  }
  CHECK(1.2 * extent + 0.2 <= 1.0);
}

TEST_CASE("dataset directory round trip") {
  SyntheticConfig sc;
  sc.image_size = 8;
  sc.train_per_class = 3;
  sc.test_per_class = 2;
  sc.labels_per_class = 1;
  Rng rng(7);
  const FullDataset full = make_synthetic_full(sc, rng);
  const auto dir = std::filesystem::temp_directory_path() / "enaet_test_dataset";
  std::filesystem::remove_all(dir);
  save_dataset(dir, full);
  CHECK(std::filesystem::exists(dir / "labels_train.csv"));
  CHECK(std::filesystem::exists(dir / "images" / "test" / "00001.png"));
  const FullDataset back = load_dataset(dir);
  REQUIRE(back.train.size() == full.train.size());
  REQUIRE(back.test.size() == full.test.size());
  CHECK(back.num_classes == full.num_classes);
  for (std::size_t i = 0; i < full.train.size(); ++i) {
    CHECK(back.train[i].label == full.train[i].label);
    for (std::size_t k = 0; k < full.train[i].image.pixels.size(); ++k)
      CHECK(std::abs(back.train[i].image.pixels[k] - full.train[i].image.pixels[k]) <= 0.5 / 255.0 + 1e-12);
  }
  std::filesystem::remove_all(dir);
  CHECK_THROWS(load_dataset(dir));
}

TEST_CASE("unlabeled pool carries no labels at the type level") {
  static_assert(std::is_same_v<decltype(DatasetSplit::unlabeled), std::vector<Image>>);
  CHECK(true);
}
