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

#ifndef ENAET_PNG_IO_HPP
#define ENAET_PNG_IO_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "enaet/image.hpp"

namespace enaet {

/// 8-bit PNG encoding of a 1- or 3-channel image.
std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const std::filesystem::path& path, const Image& image);
/// Gray, gray+alpha, RGB and RGBA inputs; alpha is dropped.
Image read_png(const std::filesystem::path& path);

}  // namespace enaet

#endif  // ENAET_PNG_IO_HPP
