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

#include "fldp/errors.hpp"

namespace fldp {

std::string_view to_string(ClipVariant variant) {
  switch (variant) {
    case ClipVariant::kGlobal: return "global";
    case ClipVariant::kPerLayerUniform: return "uniform";
    case ClipVariant::kPerLayerDim: return "dim";
    case ClipVariant::kPerLayerWeighted: return "weighted";
  }
  return "unknown";
}

ClipVariant parse_clip_variant(std::string_view name) {
  if (name == "global") return ClipVariant::kGlobal;
  if (name == "uniform") return ClipVariant::kPerLayerUniform;
  if (name == "dim") return ClipVariant::kPerLayerDim;
  if (name == "weighted") return ClipVariant::kPerLayerWeighted;
  throw ConfigError("clip.variant", "unknown clipping variant '" + std::string(name) + "'");
}

double clip_in_place(std::span<double> v, double bound) {
  if (!(bound >= 0.0)) throw DomainError("clipping bound must be >= 0");
  const double norm = std::sqrt(sum_squares(v));
  if (norm <= bound || norm == 0.0) return norm;
  double factor = bound / norm;
  std::vector<double> original(v.begin(), v.end());
  // Rounding can leave the scaled norm a few ulps above the bound; shrink the
  // factor until it does not, so clipping twice is a no-op.
  for (;;) {
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = original[k] * factor;
    if (std::sqrt(sum_squares(v)) <= bound) break;
    factor = std::nextafter(factor, 0.0);
  }
  return norm;
}

ParamTree clip_global(const ParamTree& t, double bound) {
  if (!(bound >= 0.0)) throw DomainError("clipping bound must be >= 0");
  const double norm = global_norm(t);
  if (norm <= bound || norm == 0.0) return t;
  ParamTree out = t;
  double factor = bound / norm;
  for (;;) {
    for (std::size_t i = 0; i < out.num_layers(); ++i) {
      auto dst = out.values(i);
      auto src = t.values(i);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = src[k] * factor;
    }
    if (global_norm(out) <= bound) break;
    factor = std::nextafter(factor, 0.0);
  }
  return out;
}

std::vector<double> layer_bounds(const ParamTree& t, const ClipSpec& spec) {
  const std::size_t k = t.num_layers();
  std::vector<double> bounds(k, 0.0);
  if (k == 0) return bounds;
  switch (spec.variant) {
    case ClipVariant::kGlobal:
      throw ConfigError("clip.variant", "global clipping has no per-layer bounds");
    case ClipVariant::kPerLayerUniform: {
      const double each = spec.bound / std::sqrt(static_cast<double>(k));
      std::fill(bounds.begin(), bounds.end(), each);
      return bounds;
    }
    case ClipVariant::kPerLayerDim:
    case ClipVariant::kPerLayerWeighted: {
      std::vector<double> mass(k);
      double total = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        double weight = 1.0;
        if (spec.variant == ClipVariant::kPerLayerWeighted) {
          const auto& name = t.layer(i).name;
          const auto it = spec.weights.find(name);
          if (it == spec.weights.end())
            throw ConfigError("clip.weights." + name, "missing weight for layer '" + name + "'");
          if (!(it->second > 0.0) || !std::isfinite(it->second))
            throw ConfigError("clip.weights." + name, "weight must be positive and finite");
          weight = it->second;
        }
        mass[i] = weight * static_cast<double>(t.layer(i).dim());
        total += mass[i];
      }
      for (std::size_t i = 0; i < k; ++i) bounds[i] = spec.bound * std::sqrt(mass[i] / total);
      return bounds;
    }
  }
  return bounds;
}

ParamTree clip_per_layer(const ParamTree& t, const ClipSpec& spec) {
  const auto bounds = layer_bounds(t, spec);
  ParamTree out = t;
  for (std::size_t i = 0; i < out.num_layers(); ++i) clip_in_place(out.values(i), bounds[i]);
  return out;
}

ParamTree clip(const ParamTree& t, const ClipSpec& spec) {
  if (spec.variant == ClipVariant::kGlobal) return clip_global(t, spec.bound);
  return clip_per_layer(t, spec);
}

}  // namespace fldp
