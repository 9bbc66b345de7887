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

#include "fldp/clipping.hpp"

#include <cmath>
#include <limits>

#include "doctest.h"
#include "fldp/errors.hpp"
#include "test_util.hpp"

using namespace fldp;
using fldp::testing::random_tree;
using fldp::testing::rel_err;

namespace {

ClipSpec weighted_spec(const ParamTree& t, double bound, Rng& rng) {
  ClipSpec s{bound, ClipVariant::kPerLayerWeighted, {}};
  for (const auto& name : t.names()) s.weights[name] = 0.1 + 10.0 * rng.uniform();
  return s;
}

}  // namespace

TEST_CASE("global clipping examples") {
  const ParamTree half({{"a", {0.3}}, {"b", {0.4}}});
  CHECK(clip_global(half, 1.0) == half);
  const ParamTree two({{"a", {1.2}}, {"b", {1.6}}});
  const auto c = clip_global(two, 1.0);
  CHECK(global_norm(c) <= 1.0);
  CHECK(global_norm(c) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c["a"][0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(clip_global(two, 0.0) == ParamTree::zeros_like(two));
  CHECK(clip_global(ParamTree::zeros_like(two), 1.0) == ParamTree::zeros_like(two));
  CHECK(clip_global(two, std::numeric_limits<double>::infinity()) == two);
}

TEST_CASE("per-layer bound examples") {
  const ParamTree four({{"a", {1.0}}, {"b", {1.0}}, {"c", {1.0}}, {"d", {1.0}}});
  for (double b : layer_bounds(four, {0.01, ClipVariant::kPerLayerUniform, {}})) CHECK(b == 0.005);

  const ParamTree dims({{"a", {1.0, 1.0, 1.0}}, {"b", {1.0}}});
  const auto db = layer_bounds(dims, {2.0, ClipVariant::kPerLayerDim, {}});
  CHECK(db[0] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
  CHECK(db[1] == doctest::Approx(1.0).epsilon(1e-15));

  // Equal weights reduce to dim.
  const auto wb = layer_bounds(dims, {2.0, ClipVariant::kPerLayerWeighted, {{"a", 5.0}, {"b", 5.0}}});
  CHECK(wb[0] == doctest::Approx(db[0]).epsilon(1e-15));
  CHECK(wb[1] == doctest::Approx(db[1]).epsilon(1e-15));
}

TEST_CASE("weighted variant requires every layer weight") {
  const ParamTree t({{"a", {1.0}}, {"b", {2.0}}});
  CHECK_THROWS_AS(clip(t, {1.0, ClipVariant::kPerLayerWeighted, {{"a", 1.0}}}), ConfigError);
  CHECK_THROWS_AS(clip(t, {1.0, ClipVariant::kPerLayerWeighted, {{"a", 1.0}, {"b", 0.0}}}), ConfigError);
  CHECK_THROWS_AS(layer_bounds(t, {1.0, ClipVariant::kGlobal, {}}), ConfigError);
}

TEST_CASE("fuzzed clipping invariants") {
  Rng rng(11);
  for (ClipVariant v : {ClipVariant::kGlobal, ClipVariant::kPerLayerUniform, ClipVariant::kPerLayerDim,
                        ClipVariant::kPerLayerWeighted}) {
    CAPTURE(to_string(v));
    for (int i = 0; i < 1000; ++i) {
      const auto t = random_tree(rng);
      const double bound = std::pow(10.0, -6.0 + 6.0 * rng.uniform());
      ClipSpec spec{bound, v, {}};
      if (v == ClipVariant::kPerLayerWeighted) spec = weighted_spec(t, bound, rng);
      const auto c = clip(t, spec);
      CHECK(c.congruent(t));
      CHECK(global_norm(c) <= bound * (1 + 1e-12));
      CHECK(clip(c, spec) == c);
      if (v != ClipVariant::kGlobal) {
        const auto bounds = layer_bounds(t, spec);
        double sq = 0;
        for (double b : bounds) sq += b * b;
        CHECK(rel_err(sq, bound * bound) < 1e-12);
        const auto before = layer_norms(t);
        const auto after = layer_norms(c);
        for (std::size_t k = 0; k < t.num_layers(); ++k) {
          CHECK(after[k].value <= before[k].value);
          CHECK(after[k].value <= bounds[k]);
          if (before[k].value <= bounds[k]) CHECK(c.layer(k) == t.layer(k));
        }
      } else if (global_norm(t) <= bound) {
        CHECK(c == t);
      }
    }
  }
}

TEST_CASE("variant names") {
  for (ClipVariant v : {ClipVariant::kGlobal, ClipVariant::kPerLayerUniform, ClipVariant::kPerLayerDim,
                        ClipVariant::kPerLayerWeighted})
    CHECK(parse_clip_variant(to_string(v)) == v);
  CHECK(to_string(ClipVariant::kPerLayerUniform) == "uniform");
  CHECK_THROWS_AS(parse_clip_variant("layerwise"), ConfigError);
}
