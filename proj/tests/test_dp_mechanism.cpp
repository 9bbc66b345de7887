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

#include "fldp/dp_mechanism.hpp"

#include <cmath>

#include "doctest.h"
#include "fldp/errors.hpp"
#include "test_util.hpp"

using namespace fldp;
using fldp::testing::random_tree;
using fldp::testing::rel_err;

TEST_CASE("noise conversions") {
  CHECK(convert_noise(1.0, NoiseKind::kAvg, NoiseKind::kClient, 16) == 4.0);
  CHECK(convert_noise(1.0, NoiseKind::kAvg, NoiseKind::kSum, 16) == 16.0);
  CHECK(rel_err(convert_noise(9.6e-7, NoiseKind::kClient, NoiseKind::kAvg, 1024), 3.0e-8) < 1e-15);
  CHECK(convert_noise(0.0, NoiseKind::kSum, NoiseKind::kClient, 10) == 0.0);
  CHECK_THROWS_AS(convert_noise(1.0, NoiseKind::kAvg, NoiseKind::kSum, 0.5), DomainError);
  CHECK_THROWS_AS(convert_noise(-1.0, NoiseKind::kAvg, NoiseKind::kSum, 2), DomainError);
}

TEST_CASE("round trips across fuzzed parameters") {
  Rng rng(21);
  const NoiseKind kinds[] = {NoiseKind::kClient, NoiseKind::kAvg, NoiseKind::kSum};
  for (int i = 0; i < 1000; ++i) {
    const double sigma = std::pow(10.0, -10.0 + 12.0 * rng.uniform());
    const double l = 1.0 + std::floor(std::pow(10.0, 6.0 * rng.uniform()));
    for (auto from : kinds)
      for (auto to : kinds) CHECK(rel_err(convert_noise(convert_noise(sigma, from, to, l), to, from, l), sigma) <= 1e-15);
  }
}

TEST_CASE("noise multiplier follows the sensitivity chain") {
  PrivacyParams p;
  p.clip_bound = 0.01;
  p.sigma = 3e-8;
  p.sigma_kind = NoiseKind::kAvg;
  p.sampling_rate = 0.0295;
  p.population = 34753;
  p.cohort_size = 1024;
  CHECK(rel_err(noise_multiplier(p), 0.003072) < 1e-12);
  p.sampling_rate = 0.00295;
  p.population = 69506000;
  p.cohort_size = 204800;
  CHECK(rel_err(noise_multiplier(p), 0.6144) < 1e-12);
  // Without an explicit cohort size qN is used.
  p.cohort_size = 0;
  CHECK(rel_err(p.expected_cohort(), 0.00295 * 69506000) < 1e-15);
  p.sigma = 0;
  CHECK(noise_multiplier(p) == 0.0);
  p.sigma = 1;
  p.sampling_rate = 0;
  CHECK_THROWS_AS(noise_multiplier(p), DomainError);
  p.sampling_rate = 0.1;
  p.clip_bound = 0;
  CHECK_THROWS_AS(noise_multiplier(p), DomainError);
}

TEST_CASE("add_noise edge cases") {
  Rng rng(22);
  const auto t = random_tree(rng);
  CHECK(add_noise(t, 0.0, NoiseMask::all(), 1) == t);
  CHECK(add_noise(t, 1.0, NoiseMask::only({}), 1) == t);
  CHECK(add_noise(t, 1.0, NoiseMask::all(), 9) == add_noise(t, 1.0, NoiseMask::all(), 9));
  CHECK(add_noise(t, 1.0, NoiseMask::all(), 9) != add_noise(t, 1.0, NoiseMask::all(), 10));
  CHECK_THROWS_AS(add_noise(t, 1.0, NoiseMask::only({"missing"}), 1), StructuralError);
}

TEST_CASE("partial mask leaves excluded layers untouched") {
  const ParamTree t({{"a", {1.0, 2.0}}, {"b", {3.0}}});
  const auto n = add_noise(t, 1.0, NoiseMask::only({"b"}), 3);
  CHECK(n.layer(0) == t.layer(0));
  CHECK(n.layer(1) != t.layer(1));
  CHECK_FALSE(NoiseMask::only({"b"}).covers(t));
  CHECK(NoiseMask::only({"a", "b"}).covers(t));
  CHECK(NoiseMask::all().covers(t));
}

TEST_CASE("noise moments") {
  const ParamTree zero({{"a", std::vector<double>(1000000, 0.0)}});
  const auto n = add_noise(zero, 1.0, NoiseMask::all(), 77);
  double s = 0, s2 = 0;
  for (double v : n.layer(0).values) {
    s += v;
    s2 += v * v;
  }
  const double mean = s / 1e6;
  const double std = std::sqrt(s2 / 1e6 - mean * mean);
  CHECK(std::abs(mean) < 4e-3);
  CHECK(std::abs(std - 1.0) < 0.01);
}

TEST_CASE("expected squared perturbation") {
  // Large enough that the 2% tolerance is many standard errors wide.
  Rng rng(23);
  std::vector<Layer> layers;
  for (std::size_t k = 0; k < 3; ++k) {
    Layer l{"l" + std::to_string(k), std::vector<double>(1000 * (k + 1))};
    for (double& v : l.values) v = rng.normal();
    layers.push_back(std::move(l));
  }
  const ParamTree t(std::move(layers));
  const double sigma = 0.3;
  double acc = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto n = add_noise(t, sigma, NoiseMask::all(), seed);
    const double d = global_norm(subtract(n, t));
    acc += d * d;
  }
  const double expected = sigma * sigma * static_cast<double>(t.total_size());
  CHECK(std::abs(acc / 100 - expected) / expected < 0.02);
}
