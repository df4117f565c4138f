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

#ifndef ENAET_DATA_HPP
#define ENAET_DATA_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "enaet/image.hpp"
#include "enaet/rng.hpp"

namespace enaet {

struct LabeledImage {
  Image image;
  int label = 0;
};

struct DatasetMetadata {
  /// Per-channel statistics of the training images, consumed by the encoder's
  /// input normalization.
  std::vector<double> channel_mean;
  std::vector<double> channel_std;
};

/// A labeled dataset before the labeled/unlabeled split.
struct FullDataset {
  std::vector<LabeledImage> train;
  std::vector<LabeledImage> test;
  int num_classes = 0;
};

/// Unlabeled images carry no class field.
struct DatasetSplit {
  std::vector<LabeledImage> labeled;
  std::vector<Image> unlabeled;
  std::vector<LabeledImage> test;
  int num_classes = 0;
  std::uint64_t split_seed = 0;
  DatasetMetadata metadata;
  /// Indices into FullDataset::train that were selected as labeled.
  std::vector<std::size_t> labeled_indices;
};

/// Class-balanced selection of n_labels training examples (n_labels /
/// num_classes per class); the rest become unlabeled.
DatasetSplit split_labels(const FullDataset& full, int n_labels, std::uint64_t seed);

DatasetMetadata channel_statistics(const std::vector<LabeledImage>& images);

Image hflip(const Image& image);
/// Optional flip, then an integer shift (dx, dy) with reflection padding.
Image shift_and_flip(const Image& image, bool flip, int dx, int dy);
/// Random horizontal flip (p = 0.5) and a random shift of up to
/// `max_shift` pixels per axis.
Image standard_augment(const Image& image, Rng& rng, int max_shift = 4);

struct SyntheticConfig {
  int num_classes = 4;  // up to 6 shape classes
  int image_size = 32;
  int channels = 3;
  int train_per_class = 100;
  int test_per_class = 50;
  int labels_per_class = 10;
  double center_jitter = 0.08;  // normalized units, per axis
  double noise_std = 0.03;

  void validate() const;
};

/// Shape-class images: disk, square, cross, ring, triangle, frame.
FullDataset make_synthetic_full(const SyntheticConfig& cfg, Rng& rng);
DatasetSplit make_synthetic(const SyntheticConfig& cfg, Rng& rng);

/// images/<split>/<id>.png + labels_<split>.csv for split in {train, test}.
void save_dataset(const std::filesystem::path& dir, const FullDataset& data);
FullDataset load_dataset(const std::filesystem::path& dir);

}  // namespace enaet

#endif  // ENAET_DATA_HPP
