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

#ifndef ENAET_CHECKPOINT_HPP
#define ENAET_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "enaet/model.hpp"

namespace enaet {

enum class StorageType : std::uint8_t { kFloat32 = 1, kFloat64 = 2 };

/// Single-file archive of named arrays plus string metadata.
///
/// Layout (all integers and floats little-endian):
///
///   char[8]  magic "ENAETCK1"
///   u32      format version (1)
///   u64      step counter
///   u64      config hash
///   u32      number of string entries, then per entry:
///              u32 key length, key bytes, u32 value length, value bytes
///   u32      number of arrays, then per array:
///              u32 name length, name bytes, u8 storage type (1 = f32,
///              2 = f64), u32 rank, u32 dims[rank], element data
///
/// Rng states are stored as strings under keys starting with "rng.".
struct Checkpoint {
  std::uint64_t step = 0;
  std::uint64_t config_hash = 0;
  std::map<std::string, std::string> strings;
  std::map<std::string, Tensor> arrays;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt,
                      StorageType storage = StorageType::kFloat64);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Parameters, buffers, teacher and optimizer state of a model.
void store_model(ModelState& state, Checkpoint& ckpt);
/// Loads into a state built with the same config; shapes must match.
void restore_model(ModelState& state, const Checkpoint& ckpt);

}  // namespace enaet

#endif  // ENAET_CHECKPOINT_HPP
