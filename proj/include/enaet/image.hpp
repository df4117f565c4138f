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

#ifndef ENAET_IMAGE_HPP
#define ENAET_IMAGE_HPP

#include <span>
#include <vector>

#include "enaet/tensor.hpp"

namespace enaet {

/// H x W x C image with interleaved channels and values in [0, 1].
///
/// Geometric operators address pixels in normalized coordinates: the image
/// spans [-1, 1] on both axes with (0, 0) at its center, so pixel column j
/// sits at x = (2j + 1) / W - 1.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0);

  double& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
  void clamp();
};

double pixel_to_normalized(double index, int extent);
double normalized_to_pixel(double coord, int extent);

/// Packs images into an N x C x H x W tensor.
Tensor to_batch(std::span<const Image> images);
Tensor to_batch(std::span<const Image* const> images);

}  // namespace enaet

#endif  // ENAET_IMAGE_HPP
