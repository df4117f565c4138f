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

#include "enaet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "enaet/png_io.hpp"

namespace enaet {

namespace {

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

bool inside_shape(int cls, double u, double v, double s) {
  const double r = std::hypot(u, v);
  const double cheb = std::max(std::abs(u), std::abs(v));
  switch (cls) {
    case 0: return r <= s;
    case 1: return cheb <= 0.85 * s;
    case 2:
      return (std::abs(u) <= 0.3 * s && std::abs(v) <= s) ||
             (std::abs(v) <= 0.3 * s && std::abs(u) <= s);
    case 3: return r <= s && r >= 0.55 * s;
    case 4: {
      // vertices (0, -s), (0.866 s, 0.5 s), (-0.866 s, 0.5 s)
      const double k = std::sqrt(3.0);
      return v <= 0.5 * s && v >= k * u - s && v >= -k * u - s;
    }
    case 5: return cheb <= 0.85 * s && cheb >= 0.55 * s;
    default: throw std::invalid_argument("unknown synthetic class");
  }
}

Image render_shape(int cls, const SyntheticConfig& cfg, Rng& rng) {
  const int n = cfg.image_size;
  const double cx = rng.uniform(-cfg.center_jitter, cfg.center_jitter);
  const double cy = rng.uniform(-cfg.center_jitter, cfg.center_jitter);
  const double size = rng.uniform(0.4, 0.5);
  std::vector<double> bg(cfg.channels), fg(cfg.channels);
  for (int c = 0; c < cfg.channels; ++c) {
    bg[c] = rng.uniform(0.0, 0.3);
    fg[c] = rng.uniform(0.6, 1.0);
  }

  constexpr int kSuper = 3;
  Image img(n, n, cfg.channels);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSuper; ++sy)
        for (int sx = 0; sx < kSuper; ++sx) {
          const double px = pixel_to_normalized(x - 0.5 + (sx + 0.5) / kSuper, n);
          const double py = pixel_to_normalized(y - 0.5 + (sy + 0.5) / kSuper, n);
          hits += inside_shape(cls, px - cx, py - cy, size) ? 1 : 0;
        }
      const double cover = static_cast<double>(hits) / (kSuper * kSuper);
      for (int c = 0; c < cfg.channels; ++c)
        img.at(y, x, c) = bg[c] + cover * (fg[c] - bg[c]) + rng.normal(0.0, cfg.noise_std);
    }
  img.clamp();
  return img;
}

std::string image_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05zu", i);
  return buf;
}

void save_split(const std::filesystem::path& dir, const std::string& split,
                const std::vector<LabeledImage>& items) {
  const auto image_dir = dir / "images" / split;
  std::filesystem::create_directories(image_dir);
  std::ofstream labels(dir / ("labels_" + split + ".csv"));
  if (!labels) throw std::runtime_error("cannot write labels for split " + split);
  labels << "id,class\n";
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string id = image_id(i);
    write_png(image_dir / (id + ".png"), items[i].image);
    labels << id << ',' << items[i].label << '\n';
  }
}

std::vector<LabeledImage> load_split(const std::filesystem::path& dir, const std::string& split) {
  const auto label_path = dir / ("labels_" + split + ".csv");
  std::ifstream labels(label_path);
  if (!labels) throw std::runtime_error("missing label index " + label_path.string());
  std::vector<LabeledImage> out;
  std::string line;
  int line_no = 0;
  while (std::getline(labels, line)) {
    ++line_no;
    if (line.empty() || (line_no == 1 && line.rfind("id", 0) == 0)) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error(label_path.string() + ":" + std::to_string(line_no) +
                               ": expected 'id,class'");
    LabeledImage item;
    const std::string id = line.substr(0, comma);
    try {
      item.label = std::stoi(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw std::runtime_error(label_path.string() + ":" + std::to_string(line_no) +
                               ": bad class id");
    }
    item.image = read_png(dir / "images" / split / (id + ".png"));
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace

DatasetMetadata channel_statistics(const std::vector<LabeledImage>& images) {
  DatasetMetadata meta;
  if (images.empty()) return meta;
  const int c = images[0].image.channels;
  std::vector<double> sum(c, 0.0), sq(c, 0.0);
  double count = 0.0;
  for (const auto& item : images) {
    const auto& px = item.image.pixels;
    for (std::size_t i = 0; i < px.size(); ++i) {
      sum[i % c] += px[i];
      sq[i % c] += px[i] * px[i];
    }
    count += static_cast<double>(px.size()) / c;
  }
  for (int ch = 0; ch < c; ++ch) {
    const double mean = sum[ch] / count;
    const double var = std::max(sq[ch] / count - mean * mean, 0.0);
    meta.channel_mean.push_back(mean);
    meta.channel_std.push_back(std::max(std::sqrt(var), 1e-3));
  }
  return meta;
}

DatasetSplit split_labels(const FullDataset& full, int n_labels, std::uint64_t seed) {
  const int classes = full.num_classes;
  if (classes <= 0) throw std::invalid_argument("dataset has no classes");
  if (n_labels < classes)
    throw std::invalid_argument("n_labels must be at least the number of classes");
  if (static_cast<std::size_t>(n_labels) > full.train.size())
    throw std::invalid_argument("n_labels exceeds the training set size");

  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < full.train.size(); ++i) {
    const int label = full.train[i].label;
    if (label < 0 || label >= classes) throw std::invalid_argument("label out of range");
    by_class[label].push_back(i);
  }

  Rng rng(seed);
  const int quota = n_labels / classes;
  std::vector<char> chosen(full.train.size(), 0);
  std::vector<std::size_t> leftovers;
  for (auto& members : by_class) {
    if (static_cast<int>(members.size()) < quota)
      throw std::invalid_argument("a class has fewer examples than the per-class label quota");
    rng.shuffle(members);
    for (int j = 0; j < quota; ++j) chosen[members[j]] = 1;
    leftovers.insert(leftovers.end(), members.begin() + quota, members.end());
  }
  // Remainder of n_labels / classes comes from the leftovers, at most one
  // extra per class while possible.
  int remainder = n_labels - quota * classes;
  rng.shuffle(leftovers);
  std::vector<int> extra(classes, 0);
  for (int pass = 0; pass < 2 && remainder > 0; ++pass)
    for (std::size_t idx : leftovers) {
      if (remainder == 0) break;
      const int label = full.train[idx].label;
      if (chosen[idx] || (pass == 0 && extra[label] > 0)) continue;
      chosen[idx] = 1;
      ++extra[label];
      --remainder;
    }

  DatasetSplit split;
  split.num_classes = classes;
  split.split_seed = seed;
  for (std::size_t i = 0; i < full.train.size(); ++i) {
    if (chosen[i]) {
      split.labeled.push_back(full.train[i]);
      split.labeled_indices.push_back(i);
    } else {
      split.unlabeled.push_back(full.train[i].image);
    }
  }
  split.test = full.test;
  split.metadata = channel_statistics(full.train);
  return split;
}

Image hflip(const Image& image) { return shift_and_flip(image, true, 0, 0); }

Image shift_and_flip(const Image& image, bool flip, int dx, int dy) {
  Image out(image.height, image.width, image.channels);
  for (int y = 0; y < image.height; ++y) {
    const int sy = reflect(y - dy, image.height);
    for (int x = 0; x < image.width; ++x) {
      int sx = reflect(x - dx, image.width);
      if (flip) sx = image.width - 1 - sx;
      for (int c = 0; c < image.channels; ++c) out.at(y, x, c) = image.at(sy, sx, c);
    }
  }
  return out;
}

Image standard_augment(const Image& image, Rng& rng, int max_shift) {
  const bool flip = rng.bernoulli(0.5);
  const int dx = max_shift > 0 ? rng.uniform_int(-max_shift, max_shift) : 0;
  const int dy = max_shift > 0 ? rng.uniform_int(-max_shift, max_shift) : 0;
  return shift_and_flip(image, flip, dx, dy);
}

void SyntheticConfig::validate() const {
  if (num_classes < 2 || num_classes > 6)
    throw std::invalid_argument("synthetic num_classes must be in [2, 6]");
  if (image_size < 8) throw std::invalid_argument("synthetic image_size must be at least 8");
  if (channels != 1 && channels != 3) throw std::invalid_argument("channels must be 1 or 3");
  if (train_per_class <= 0 || test_per_class <= 0)
    throw std::invalid_argument("samples per class must be positive");
  if (labels_per_class <= 0 || labels_per_class > train_per_class)
    throw std::invalid_argument("labels_per_class must be in [1, train_per_class]");
  if (!(center_jitter >= 0.0 && center_jitter <= 0.3))
    throw std::invalid_argument("center_jitter must be in [0, 0.3]");
  if (!(noise_std >= 0.0)) throw std::invalid_argument("noise_std must be non-negative");
}

FullDataset make_synthetic_full(const SyntheticConfig& cfg, Rng& rng) {
  cfg.validate();
  FullDataset data;
  data.num_classes = cfg.num_classes;
  for (int i = 0; i < cfg.train_per_class; ++i)
    for (int cls = 0; cls < cfg.num_classes; ++cls)
      data.train.push_back({render_shape(cls, cfg, rng), cls});
  for (int i = 0; i < cfg.test_per_class; ++i)
    for (int cls = 0; cls < cfg.num_classes; ++cls)
      data.test.push_back({render_shape(cls, cfg, rng), cls});
  return data;
}

DatasetSplit make_synthetic(const SyntheticConfig& cfg, Rng& rng) {
  const FullDataset full = make_synthetic_full(cfg, rng);
  const std::uint64_t split_seed = rng.engine()();
  return split_labels(full, cfg.labels_per_class * cfg.num_classes, split_seed);
}

void save_dataset(const std::filesystem::path& dir, const FullDataset& data) {
  save_split(dir, "train", data.train);
  save_split(dir, "test", data.test);
}

FullDataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw std::runtime_error("dataset directory not found: " + dir.string());
  FullDataset data;
  data.train = load_split(dir, "train");
  data.test = load_split(dir, "test");
  int max_label = -1;
  for (const auto* split : {&data.train, &data.test})
    for (const auto& item : *split) max_label = std::max(max_label, item.label);
  data.num_classes = max_label + 1;
  if (data.train.empty()) throw std::runtime_error("dataset has no training images");
  return data;
}

}  // namespace enaet
