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

#ifndef FLDP_CLIPPING_HPP_
#define FLDP_CLIPPING_HPP_

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fldp/param_tree.hpp"

namespace fldp {

enum class ClipVariant { kGlobal, kPerLayerUniform, kPerLayerDim, kPerLayerWeighted };

/// "global" | "uniform" | "dim" | "weighted"
std::string_view to_string(ClipVariant variant);
ClipVariant parse_clip_variant(std::string_view name);

/**
 * How a clipping bound C is applied to a tree.
 *
 * Per-layer variants split C into layer bounds C_i with sum C_i^2 = C^2:
 *   uniform   C_i = C / sqrt(K)
 *   dim       C_i = C * sqrt(D_i / sum_j D_j)
 *   weighted  C_i = C * sqrt(a_i D_i / sum_j a_j D_j)
 * where K is the layer count, D_i the parameter count of layer i and a_i
 * the configured weight. bound may be +infinity (no clipping).
 */
struct ClipSpec {
  double bound = 0.0;
  ClipVariant variant = ClipVariant::kGlobal;
  std::map<std::string, double> weights;

  bool operator==(const ClipSpec&) const = default;
};

/// Scales v in place by min(1, bound / ||v||). Returns the norm before clipping.
/// The result's computed norm never exceeds bound.
double clip_in_place(std::span<double> v, double bound);

/// t * min(1, C / ||t||); zero trees and trees already within C are returned unchanged.
ParamTree clip_global(const ParamTree& t, double bound);

/// Per-layer bounds C_i for the tree's layout. Throws ConfigError for a
/// global variant or a missing/non-positive weight.
std::vector<double> layer_bounds(const ParamTree& t, const ClipSpec& spec);

/// Each layer clipped to its own C_i.
ParamTree clip_per_layer(const ParamTree& t, const ClipSpec& spec);

/// Dispatches on spec.variant.
ParamTree clip(const ParamTree& t, const ClipSpec& spec);

}  // namespace fldp

#endif  // FLDP_CLIPPING_HPP_
