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

// Small classifiers with hand-written backward passes.
//
//   LinearSoftmax  logits = W x + b
//   MlpLayerNorm   logits = W2 tanh(LN(W1 x + b1)) + b2
//   TinyAttention  one pre-LayerNorm transformer block over seq_len tokens:
//                    e   = embed x_s
//                    r   = e + wf * attention(wqkv * ln1(e))
//                    y   = r + w2 tanh(w1 ln2(r))
//                  followed by mean pooling over tokens and a linear head.
//
// All losses are mean softmax cross-entropy over the batch.

#ifndef FLDP_MODELS_HPP_
#define FLDP_MODELS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fldp/param_tree.hpp"

namespace fldp {

enum class ModelKind { kLinearSoftmax, kMlpLayerNorm, kTinyAttention };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::kLinearSoftmax;
  std::size_t input_dim = 1;
  std::size_t hidden_dim = 1;  ///< unused by LinearSoftmax
  std::size_t num_classes = 2;
  std::size_t seq_len = 1;     ///< TinyAttention only
  double layernorm_epsilon = 1e-5;

  /// Number of features per example (seq_len * input_dim for TinyAttention).
  std::size_t example_dim() const noexcept;
  /// Throws ConfigError on zero sizes or a non-positive epsilon.
  void validate() const;

  bool operator==(const ModelSpec&) const = default;
};

/// Labeled examples stored row-major, example_dim features per example.
struct Batch {
  std::size_t example_dim = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }
  std::span<const double> example(std::size_t i) const {
    return std::span<const double>(features).subspan(i * example_dim, example_dim);
  }
  void push_back(std::span<const double> x, int label);

  bool operator==(const Batch&) const = default;
};

/// Examples at the given indices, in the given order.
Batch select(const Batch& batch, std::span<const std::size_t> indices);

struct LayerShape {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 1;
  enum class Init { kWeight, kZero, kOne } init = Init::kWeight;

  std::size_t size() const noexcept { return rows * cols; }
};

/// Parameter layout in tree order.
std::vector<LayerShape> layout(const ModelSpec& spec);

/// Weights ~ N(0, 1/fan_in); biases 0; LayerNorm gains 1.
ParamTree init_params(const ModelSpec& spec, std::uint64_t seed);

struct LossAndGrad {
  double loss = 0.0;
  ParamTree grad;
};

double loss(const ModelSpec& spec, const ParamTree& params, const Batch& batch);
ParamTree grad(const ModelSpec& spec, const ParamTree& params, const Batch& batch);
LossAndGrad loss_and_grad(const ModelSpec& spec, const ParamTree& params, const Batch& batch);

/// Fraction of examples whose arg-max logit equals the label.
double accuracy(const ModelSpec& spec, const ParamTree& params, const Batch& batch);

/// Central differences (loss(p + h e_i) - loss(p - h e_i)) / 2h for every coordinate.
/// Large h is allowed and simply inaccurate.
ParamTree finite_diff_grad(const ModelSpec& spec, const ParamTree& params, const Batch& batch,
                           double h);

}  // namespace fldp

#endif  // FLDP_MODELS_HPP_
