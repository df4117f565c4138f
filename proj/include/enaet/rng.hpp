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

#ifndef ENAET_RNG_HPP
#define ENAET_RNG_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace enaet {

/// Seeded random stream. The engine state round-trips through text so
/// checkpoints can resume a run exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /// Independent stream derived from (seed, stream_id).
  static Rng derive(std::uint64_t seed, std::uint64_t stream_id);

  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal(double mean = 0.0, double stddev = 1.0);
  double beta(double a, double b);
  bool bernoulli(double p);
  int uniform_int(int lo, int hi);  // inclusive bounds

  template <typename T>
  void shuffle(std::vector<T>& v) {
    std::shuffle(v.begin(), v.end(), engine_);
  }

  std::string state() const;
  void set_state(const std::string& s);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace enaet

#endif  // ENAET_RNG_HPP
