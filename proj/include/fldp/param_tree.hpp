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

#ifndef FLDP_PARAM_TREE_HPP_
#define FLDP_PARAM_TREE_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace fldp {

/// One named parameter vector.
struct Layer {
  std::string name;
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
  bool operator==(const Layer&) const = default;
};

/// A (name, value) pair reported per layer, in layer order.
struct NamedValue {
  std::string name;
  double value = 0.0;
};

/**
 * Ordered collection of named parameter vectors.
 *
 * Holds model parameters, gradients and client deltas. Layer order is fixed
 * at construction and every operation preserves it. Two trees are congruent
 * when they have the same layer names, order and dimensions; binary
 * operations require congruence and throw StructuralError otherwise.
 */
class ParamTree {
 public:
  ParamTree() = default;
  /// Throws StructuralError on duplicate or empty names, or empty layers.
  explicit ParamTree(std::vector<Layer> layers);

  static ParamTree zeros_like(const ParamTree& other);

  std::size_t num_layers() const noexcept { return layers_.size(); }
  std::size_t total_size() const noexcept;
  bool empty() const noexcept { return layers_.empty(); }

  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::span<double> values(std::size_t i) { return layers_.at(i).values; }
  std::span<const double> values(std::size_t i) const { return layers_.at(i).values; }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Layer values by name; throws StructuralError if absent.
  std::span<double> operator[](std::string_view name);
  std::span<const double> operator[](std::string_view name) const;

  std::vector<std::string> names() const;

  bool congruent(const ParamTree& other) const noexcept;
  /// Throws StructuralError naming the first mismatching layer.
  void require_congruent(const ParamTree& other, std::string_view context) const;

  bool operator==(const ParamTree&) const = default;

 private:
  std::vector<Layer> layers_;
};

/// Sum of squares of one vector.
double sum_squares(std::span<const double> v);

/// L2 norm over all layers.
double global_norm(const ParamTree& t);

/// L2 norm of each layer, in layer order.
std::vector<NamedValue> layer_norms(const ParamTree& t);

/// alpha * x + y. Inputs are not modified.
ParamTree axpy(double alpha, const ParamTree& x, const ParamTree& y);

ParamTree scaled(const ParamTree& t, double factor);
ParamTree add(const ParamTree& a, const ParamTree& b);
ParamTree subtract(const ParamTree& a, const ParamTree& b);

/// Everything before the first '.', e.g. "ln1.gain" -> "ln1".
std::string_view layer_group(std::string_view layer_name);

nlohmann::json to_json(const ParamTree& t);
/// Accepts {"layers":[{"name":..., "values":[...]}]}.
ParamTree param_tree_from_json(const nlohmann::json& j);

}  // namespace fldp

#endif  // FLDP_PARAM_TREE_HPP_
