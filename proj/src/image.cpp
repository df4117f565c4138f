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

#include "enaet/image.hpp"

#include <algorithm>
#include <stdexcept>

namespace enaet {

Image::Image(int h, int w, int c, double fill)
    : height(h), width(w), channels(c),
      pixels(static_cast<std::size_t>(h) * w * c, fill) {
  if (h <= 0 || w <= 0 || c <= 0) throw std::invalid_argument("image dimensions must be positive");
}

void Image::clamp() {
  for (double& v : pixels) v = std::clamp(v, 0.0, 1.0);
}

double pixel_to_normalized(double index, int extent) { return (2.0 * index + 1.0) / extent - 1.0; }

double normalized_to_pixel(double coord, int extent) { return ((coord + 1.0) * extent - 1.0) / 2.0; }

namespace {

void pack(const Image& img, double* dst) {
  const std::size_t plane = static_cast<std::size_t>(img.height) * img.width;
  for (int c = 0; c < img.channels; ++c)
    for (std::size_t p = 0; p < plane; ++p)
      dst[c * plane + p] = img.pixels[p * img.channels + c];
}

Tensor make_batch_tensor(const Image& first, std::size_t n) {
  return Tensor({static_cast<int>(n), first.channels, first.height, first.width});
}

}  // namespace

Tensor to_batch(std::span<const Image> images) {
  if (images.empty()) throw std::invalid_argument("empty image batch");
  Tensor t = make_batch_tensor(images[0], images.size());
  const std::size_t stride = t.row_size();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i].same_shape(images[0])) throw std::invalid_argument("image shapes differ in batch");
    pack(images[i], t.data() + i * stride);
  }
  return t;
}

Tensor to_batch(std::span<const Image* const> images) {
  if (images.empty()) throw std::invalid_argument("empty image batch");
  Tensor t = make_batch_tensor(*images[0], images.size());
  const std::size_t stride = t.row_size();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i]->same_shape(*images[0])) throw std::invalid_argument("image shapes differ in batch");
    pack(*images[i], t.data() + i * stride);
  }
  return t;
}

}  // namespace enaet
