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

#include "fldp/param_tree.hpp"

#include <cmath>
#include <unordered_set>

#include "fldp/errors.hpp"

namespace fldp {

ParamTree::ParamTree(std::vector<Layer> layers) : layers_(std::move(layers)) {
  std::unordered_set<std::string_view> seen;
  for (const auto& layer : layers_) {
    if (layer.name.empty()) throw StructuralError("layer with empty name");
    if (layer.values.empty()) throw StructuralError("layer '" + layer.name + "' has dimension 0");
    if (!seen.insert(layer.name).second)
      throw StructuralError("duplicate layer name '" + layer.name + "'");
  }
}

ParamTree ParamTree::zeros_like(const ParamTree& other) {
  ParamTree out = other;
  for (auto& layer : out.layers_) std::fill(layer.values.begin(), layer.values.end(), 0.0);
  return out;
}

std::size_t ParamTree::total_size() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.values.size();
  return n;
}

std::optional<std::size_t> ParamTree::find(std::string_view name) const {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (layers_[i].name == name) return i;
  return std::nullopt;
}

std::span<double> ParamTree::operator[](std::string_view name) {
  const auto i = find(name);
  if (!i) throw StructuralError("no layer named '" + std::string(name) + "'");
  return layers_[*i].values;
}

std::span<const double> ParamTree::operator[](std::string_view name) const {
  const auto i = find(name);
  if (!i) throw StructuralError("no layer named '" + std::string(name) + "'");
  return layers_[*i].values;
}

std::vector<std::string> ParamTree::names() const {
  std::vector<std::string> out;
  out.reserve(layers_.size());
  for (const auto& layer : layers_) out.push_back(layer.name);
  return out;
}

bool ParamTree::congruent(const ParamTree& other) const noexcept {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].name != other.layers_[i].name) return false;
    if (layers_[i].values.size() != other.layers_[i].values.size()) return false;
  }
  return true;
}

void ParamTree::require_congruent(const ParamTree& other, std::string_view context) const {
  const std::size_t n = std::min(layers_.size(), other.layers_.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = layers_[i];
    const auto& b = other.layers_[i];
    if (a.name != b.name || a.values.size() != b.values.size()) {
      throw StructuralError(std::string(context) + ": trees differ at layer " + std::to_string(i) +
                            " ('" + a.name + "'[" + std::to_string(a.values.size()) + "] vs '" +
                            b.name + "'[" + std::to_string(b.values.size()) + "])");
    }
  }
  if (layers_.size() != other.layers_.size()) {
    const auto& longer = layers_.size() > n ? layers_ : other.layers_;
    throw StructuralError(std::string(context) + ": trees differ at layer " + std::to_string(n) +
                          " ('" + longer[n].name + "' present in only one tree)");
  }
}

double sum_squares(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

double global_norm(const ParamTree& t) {
  double acc = 0.0;
  for (std::size_t i = 0; i < t.num_layers(); ++i) acc += sum_squares(t.values(i));
  return std::sqrt(acc);
}

std::vector<NamedValue> layer_norms(const ParamTree& t) {
  std::vector<NamedValue> out;
  out.reserve(t.num_layers());
  for (const auto& layer : t.layers()) out.push_back({layer.name, std::sqrt(sum_squares(layer.values))});
  return out;
}

ParamTree axpy(double alpha, const ParamTree& x, const ParamTree& y) {
  x.require_congruent(y, "axpy");
  ParamTree out = y;
  for (std::size_t i = 0; i < out.num_layers(); ++i) {
    auto dst = out.values(i);
    auto src = x.values(i);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += alpha * src[k];
  }
  return out;
}

ParamTree scaled(const ParamTree& t, double factor) {
  ParamTree out = t;
  for (std::size_t i = 0; i < out.num_layers(); ++i)
    for (double& v : out.values(i)) v *= factor;
  return out;
}

ParamTree add(const ParamTree& a, const ParamTree& b) {
  a.require_congruent(b, "add");
  ParamTree out = a;
  for (std::size_t i = 0; i < out.num_layers(); ++i) {
    auto dst = out.values(i);
    auto src = b.values(i);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
  return out;
}

ParamTree subtract(const ParamTree& a, const ParamTree& b) {
  a.require_congruent(b, "subtract");
  ParamTree out = a;
  for (std::size_t i = 0; i < out.num_layers(); ++i) {
    auto dst = out.values(i);
    auto src = b.values(i);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] -= src[k];
  }
  return out;
}

std::string_view layer_group(std::string_view layer_name) {
  return layer_name.substr(0, layer_name.find('.'));
}

nlohmann::json to_json(const ParamTree& t) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : t.layers())
    layers.push_back({{"name", layer.name}, {"values", layer.values}});
  return {{"layers", std::move(layers)}};
}

ParamTree param_tree_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("layers") || !j.at("layers").is_array())
    throw StructuralError("parameter tree JSON must be an object with a 'layers' array");
  std::vector<Layer> layers;
  for (const auto& entry : j.at("layers")) {
    if (!entry.contains("name") || !entry.contains("values"))
      throw StructuralError("each layer needs 'name' and 'values'");
    layers.push_back({entry.at("name").get<std::string>(),
                      entry.at("values").get<std::vector<double>>()});
  }
  return ParamTree(std::move(layers));
}

}  // namespace fldp
