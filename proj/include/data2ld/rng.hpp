// Copyright 2026 The data2ld Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DATA2LD_RNG_HPP_
#define DATA2LD_RNG_HPP_

#include <cstdint>
#include <random>

namespace data2ld {

// Deterministic random stream. Uses mt19937_64, whose output sequence is
// pinned by the C++ standard, and a hand-rolled Box-Muller transform instead
// of std::normal_distribution (whose algorithm is implementation-defined),
// so seeded runs reproduce across standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // Independent stream for item `index` under `base_seed`. Derivation mixes
  // both words through splitmix64 so neighbouring indices decorrelate.
  static RngStream substream(std::uint64_t base_seed, std::uint64_t index);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();

  // Standard normal via Box-Muller; generates pairs, caches the second.
  double normal();

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// splitmix64 mixing step; good avalanche, used for seed derivation.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace data2ld

#endif  // DATA2LD_RNG_HPP_
