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

#include "fldp/rng.hpp"

#include <cmath>
#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"

using namespace fldp;

TEST_CASE("philox known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and seed-sensitive") {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs |= x != c.next_u64();
  }
  CHECK(differs);
}

TEST_CASE("derived seeds depend on every tag and its position") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 20; ++r)
    for (std::uint64_t c = 0; c < 20; ++c) seen.insert(derive_seed(7, {tag(Stream::kNoise), r, c}));
  CHECK(seen.size() == 400);
  CHECK(derive_seed(7, {1, 2}) != derive_seed(7, {2, 1}));
  CHECK(derive_seed(7, {1}) != derive_seed(8, {1}));
  CHECK(derive_seed(7, {1, 2}) == derive_seed(7, {1, 2}));
}

TEST_CASE("uniform and normal moments") {
  Rng rng(5);
  const int n = 200000;
  double s = 0, s2 = 0, u = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
    const double v = rng.uniform();
    CHECK_FALSE((v < 0.0 || v >= 1.0));
    u += v;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
  CHECK(std::abs(u / n - 0.5) < 0.005);
}

TEST_CASE("uniform_index covers its range evenly") {
  Rng rng(6);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.uniform_index(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("gamma mean matches its shape") {
  Rng rng(7);
  for (double shape : {0.1, 0.5, 1.0, 3.0}) {
    double s = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape);
      CHECK_FALSE(g < 0.0);
      s += g;
    }
    CHECK(std::abs(s / n - shape) < 0.05 * shape + 0.005);
  }
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(8);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  rng.shuffle(std::span<int>(w));
  CHECK(w != v);
  std::sort(w.begin(), w.end());
  CHECK(w == v);
}
