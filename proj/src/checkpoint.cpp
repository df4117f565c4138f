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

#include "enaet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace enaet {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'E', 'N', 'A', 'E', 'T', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  template <typename T>
  void pod(const T& v) {
    os_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void bytes(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  Reader(std::istream& is, std::string source) : is_(is), source_(std::move(source)) {}
  template <typename T>
  T pod() {
    T v{};
    is_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is_) fail("truncated file");
    return v;
  }
  std::string bytes() {
    const auto n = pod<std::uint32_t>();
    if (n > (1u << 30)) fail("implausible string length");
    std::string s(n, '\0');
    is_.read(s.data(), n);
    if (!is_) fail("truncated string");
    return s;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("checkpoint " + source_ + ": " + what);
  }

 private:
  std::istream& is_;
  std::string source_;
};

template <typename Params>
void put_params(const Params& params, Checkpoint& ckpt) {
  for (const auto& p : params) ckpt.arrays[p.name] = p.var->value;
}

void put_buffers(const std::vector<NamedBuffer>& bufs, Checkpoint& ckpt) {
  for (const auto& b : bufs) ckpt.arrays[b.name] = *b.tensor;
}

const Tensor& fetch(const Checkpoint& ckpt, const std::string& name, const Tensor& like) {
  const auto it = ckpt.arrays.find(name);
  if (it == ckpt.arrays.end()) throw std::runtime_error("checkpoint is missing array " + name);
  if (!it->second.same_shape(like))
    throw std::runtime_error("checkpoint array " + name + " has shape " +
                             it->second.shape_string() + ", expected " + like.shape_string());
  return it->second;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt,
                      StorageType storage) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + tmp + " for writing");
    Writer w(os);
    os.write(kMagic, sizeof kMagic);
    w.pod(kVersion);
    w.pod(ckpt.step);
    w.pod(ckpt.config_hash);
    w.pod(static_cast<std::uint32_t>(ckpt.strings.size()));
    for (const auto& [k, v] : ckpt.strings) {
      w.bytes(k);
      w.bytes(v);
    }
    w.pod(static_cast<std::uint32_t>(ckpt.arrays.size()));
    for (const auto& [name, t] : ckpt.arrays) {
      w.bytes(name);
      w.pod(static_cast<std::uint8_t>(storage));
      w.pod(static_cast<std::uint32_t>(t.rank()));
      for (int d : t.shape()) w.pod(static_cast<std::uint32_t>(d));
      if (storage == StorageType::kFloat64) {
        os.write(reinterpret_cast<const char*>(t.data()),
                 static_cast<std::streamsize>(t.size() * sizeof(double)));
      } else {
        std::vector<float> f(t.values().begin(), t.values().end());
        os.write(reinterpret_cast<const char*>(f.data()),
                 static_cast<std::streamsize>(f.size() * sizeof(float)));
      }
    }
    os.flush();
    if (!os) throw std::runtime_error("failed writing checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  Reader r(is, path.string());
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) r.fail("bad magic");
  if (r.pod<std::uint32_t>() != kVersion) r.fail("unsupported version");
  Checkpoint ckpt;
  ckpt.step = r.pod<std::uint64_t>();
  ckpt.config_hash = r.pod<std::uint64_t>();
  const auto n_strings = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_strings; ++i) {
    std::string k = r.bytes();
    ckpt.strings[k] = r.bytes();
  }
  const auto n_arrays = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_arrays; ++i) {
    std::string name = r.bytes();
    const auto storage = r.pod<std::uint8_t>();
    const auto rank = r.pod<std::uint32_t>();
    if (rank > 8) r.fail("implausible rank for " + name);
    std::vector<int> shape(rank);
    for (auto& d : shape) d = static_cast<int>(r.pod<std::uint32_t>());
    Tensor t(shape);
    if (storage == static_cast<std::uint8_t>(StorageType::kFloat64)) {
      is.read(reinterpret_cast<char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
    } else if (storage == static_cast<std::uint8_t>(StorageType::kFloat32)) {
      std::vector<float> f(t.size());
      is.read(reinterpret_cast<char*>(f.data()),
              static_cast<std::streamsize>(f.size() * sizeof(float)));
      std::copy(f.begin(), f.end(), t.data());
    } else {
      r.fail("unknown storage type for " + name);
    }
    if (!is) r.fail("truncated array " + name);
    ckpt.arrays.emplace(std::move(name), std::move(t));
  }
  return ckpt;
}

void store_model(ModelState& state, Checkpoint& ckpt) {
  ckpt.step = static_cast<std::uint64_t>(state.step);
  put_params(backbone_parameters(state), ckpt);
  put_params(decoder_parameters(state), ckpt);
  put_params(teacher_parameters(state), ckpt);
  put_buffers(backbone_buffers(state), ckpt);
  put_buffers(decoder_buffers(state), ckpt);
  put_buffers(teacher_buffers(state), ckpt);
  const auto backbone = backbone_parameters(state);
  for (std::size_t i = 0; i < backbone.size(); ++i) {
    ckpt.arrays["optim.adam.m." + backbone[i].name] = state.adam.first_moment[i];
    ckpt.arrays["optim.adam.v." + backbone[i].name] = state.adam.second_moment[i];
  }
  const auto decoders = decoder_parameters(state);
  for (std::size_t i = 0; i < decoders.size(); ++i)
    ckpt.arrays["optim.sgd.velocity." + decoders[i].name] = state.sgd.velocity[i];
}

void restore_model(ModelState& state, const Checkpoint& ckpt) {
  for (auto group : {backbone_parameters(state), decoder_parameters(state), teacher_parameters(state)})
    for (auto& p : group) p.var->value = fetch(ckpt, p.name, p.var->value);
  for (auto group : {backbone_buffers(state), decoder_buffers(state), teacher_buffers(state)})
    for (auto& b : group) *b.tensor = fetch(ckpt, b.name, *b.tensor);
  const auto backbone = backbone_parameters(state);
  for (std::size_t i = 0; i < backbone.size(); ++i) {
    state.adam.first_moment[i] =
        fetch(ckpt, "optim.adam.m." + backbone[i].name, state.adam.first_moment[i]);
    state.adam.second_moment[i] =
        fetch(ckpt, "optim.adam.v." + backbone[i].name, state.adam.second_moment[i]);
  }
  const auto decoders = decoder_parameters(state);
  for (std::size_t i = 0; i < decoders.size(); ++i)
    state.sgd.velocity[i] =
        fetch(ckpt, "optim.sgd.velocity." + decoders[i].name, state.sgd.velocity[i]);
  state.step = static_cast<std::int64_t>(ckpt.step);
}

}  // namespace enaet
