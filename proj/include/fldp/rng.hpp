// Copyright 2026 The fldp Authors.
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

// Counter-based random streams for reproducible simulation.
//
// Every random draw in the engine comes from a Philox4x32-10 stream keyed by
// a 64-bit seed. Seeds for sub-streams (cohort sampling, local shuffling,
// per-layer noise, ...) are derived by hashing the parent seed with integer
// tags, so two runs with the same configuration produce bitwise identical
// draws regardless of thread scheduling. Distributions are implemented here
// rather than taken from <random>, whose distribution algorithms are
// implementation-defined.

#ifndef FLDP_RNG_HPP_
#define FLDP_RNG_HPP_

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <string_view>

namespace fldp {

/// Name of the generator and Gaussian transform, recorded in run manifests.
inline constexpr std::string_view kRngAlgorithm = "philox4x32-10+box-muller/v1";

/// Raw Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Stable hash of a parent seed and a sequence of tags.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

/// Sub-stream tags used with derive_seed.
enum class Stream : std::uint64_t {
  kCohort = 1,
  kLocalShuffle = 2,
  kNoise = 3,
  kInit = 4,
  kPopulation = 5,
  kProbe = 6,
  kIidShuffle = 7,
};

inline std::uint64_t tag(Stream s) { return static_cast<std::uint64_t>(s); }

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n). Unbiased (Lemire's method with rejection).
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via Box-Muller.
  double normal();
  /// Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
  double gamma(double shape);

  /// Fisher-Yates shuffle driven by uniform_index.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  unsigned used_ = 4;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace fldp

#endif  // FLDP_RNG_HPP_
