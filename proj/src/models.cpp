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

#include "fldp/models.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "fldp/errors.hpp"
#include "fldp/rng.hpp"

namespace fldp {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstVectorMap = Eigen::Map<const Vector>;
using VectorMap = Eigen::Map<Vector>;

// Parameter accessors bound to the layout of one ModelSpec.
class Params {
 public:
  Params(const std::vector<LayerShape>& shapes, const ParamTree& tree)
      : shapes_(shapes), tree_(tree) {}

  ConstMatrixMap mat(std::size_t i) const {
    return {tree_.values(i).data(), static_cast<Eigen::Index>(shapes_[i].rows),
            static_cast<Eigen::Index>(shapes_[i].cols)};
  }
  ConstVectorMap vec(std::size_t i) const {
    return {tree_.values(i).data(), static_cast<Eigen::Index>(shapes_[i].size())};
  }

 private:
  const std::vector<LayerShape>& shapes_;
  const ParamTree& tree_;
};

class Grads {
 public:
  Grads(const std::vector<LayerShape>& shapes, ParamTree& tree) : shapes_(shapes), tree_(tree) {}

  MatrixMap mat(std::size_t i) {
    return {tree_.values(i).data(), static_cast<Eigen::Index>(shapes_[i].rows),
            static_cast<Eigen::Index>(shapes_[i].cols)};
  }
  VectorMap vec(std::size_t i) {
    return {tree_.values(i).data(), static_cast<Eigen::Index>(shapes_[i].size())};
  }

 private:
  const std::vector<LayerShape>& shapes_;
  ParamTree& tree_;
};

// Cross-entropy of one logit vector; writes softmax - onehot into dlogits.
double cross_entropy(const Vector& logits, int label, Vector* dlogits) {
  const double max_logit = logits.maxCoeff();
  const Vector shifted = logits.array() - max_logit;
  const Vector exps = shifted.array().exp();
  const double total = exps.sum();
  const double loss = std::log(total) - shifted(label);
  if (dlogits) {
    *dlogits = exps / total;
    (*dlogits)(label) -= 1.0;
  }
  return loss;
}

struct LayerNormCache {
  Vector xhat;
  double rstd = 0.0;
};

Vector layernorm_forward(const Vector& x, const ConstVectorMap& gain, const ConstVectorMap& bias,
                         double epsilon, LayerNormCache& cache) {
  const double mean = x.mean();
  const Vector centered = x.array() - mean;
  const double var = centered.squaredNorm() / static_cast<double>(x.size());
  cache.rstd = 1.0 / std::sqrt(var + epsilon);
  cache.xhat = centered * cache.rstd;
  return (cache.xhat.array() * gain.array() + bias.array()).matrix();
}

// Accumulates gain/bias gradients; returns d loss / d x.
Vector layernorm_backward(const Vector& dy, const ConstVectorMap& gain,
                          const LayerNormCache& cache, VectorMap dgain, VectorMap dbias) {
  dgain.array() += dy.array() * cache.xhat.array();
  dbias += dy;
  const Vector dxhat = (dy.array() * gain.array()).matrix();
  const double n = static_cast<double>(dy.size());
  const double mean_dxhat = dxhat.sum() / n;
  const double mean_dxhat_xhat = dxhat.dot(cache.xhat) / n;
  return (cache.rstd * (dxhat.array() - mean_dxhat - cache.xhat.array() * mean_dxhat_xhat)).matrix();
}

void row_layernorm_forward(const Matrix& x, const ConstVectorMap& gain, const ConstVectorMap& bias,
                           double epsilon, Matrix& y, std::vector<LayerNormCache>& caches) {
  y.resize(x.rows(), x.cols());
  caches.resize(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    const Vector row = x.row(s).transpose();
    y.row(s) = layernorm_forward(row, gain, bias, epsilon, caches[static_cast<std::size_t>(s)]).transpose();
  }
}

Matrix row_layernorm_backward(const Matrix& dy, const ConstVectorMap& gain,
                              const std::vector<LayerNormCache>& caches, VectorMap dgain,
                              VectorMap dbias) {
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index s = 0; s < dy.rows(); ++s) {
    const Vector row = dy.row(s).transpose();
    dx.row(s) = layernorm_backward(row, gain, caches[static_cast<std::size_t>(s)], dgain, dbias).transpose();
  }
  return dx;
}

// Layer indices, shared by layout() and the forward/backward passes.
namespace linear {
constexpr std::size_t kW = 0, kB = 1;
}
namespace mlp {
constexpr std::size_t kW1 = 0, kB1 = 1, kLnGain = 2, kLnBias = 3, kW2 = 4, kB2 = 5;
}
namespace attn {
constexpr std::size_t kEmbed = 0, kEmbedBias = 1, kLn1Gain = 2, kLn1Bias = 3, kWqkv = 4, kWf = 5,
                      kLn2Gain = 6, kLn2Bias = 7, kW1 = 8, kW1Bias = 9, kW2 = 10, kW2Bias = 11,
                      kHead = 12, kHeadBias = 13;
}

// Returns the example loss; accumulates (unscaled) gradients when grads is non-null.
double example_linear([[maybe_unused]] const ModelSpec& spec, const Params& p, std::span<const double> x_raw,
                      int label, Grads* grads, Vector* logits_out) {
  const ConstVectorMap x(x_raw.data(), static_cast<Eigen::Index>(x_raw.size()));
  const Vector logits = p.mat(linear::kW) * x + p.vec(linear::kB);
  if (logits_out) *logits_out = logits;
  Vector dlogits;
  const double l = cross_entropy(logits, label, grads ? &dlogits : nullptr);
  if (grads) {
    grads->mat(linear::kW).noalias() += dlogits * x.transpose();
    grads->vec(linear::kB) += dlogits;
  }
  return l;
}

double example_mlp(const ModelSpec& spec, const Params& p, std::span<const double> x_raw, int label,
                   Grads* grads, Vector* logits_out) {
  const ConstVectorMap x(x_raw.data(), static_cast<Eigen::Index>(x_raw.size()));
  const Vector h = p.mat(mlp::kW1) * x + p.vec(mlp::kB1);
  LayerNormCache ln;
  const Vector n = layernorm_forward(h, p.vec(mlp::kLnGain), p.vec(mlp::kLnBias),
                                     spec.layernorm_epsilon, ln);
  const Vector a = n.array().tanh().matrix();
  const Vector logits = p.mat(mlp::kW2) * a + p.vec(mlp::kB2);
  if (logits_out) *logits_out = logits;
  Vector dlogits;
  const double l = cross_entropy(logits, label, grads ? &dlogits : nullptr);
  if (!grads) return l;

  grads->mat(mlp::kW2).noalias() += dlogits * a.transpose();
  grads->vec(mlp::kB2) += dlogits;
  const Vector da = p.mat(mlp::kW2).transpose() * dlogits;
  const Vector dn = (da.array() * (1.0 - a.array().square())).matrix();
  const Vector dh = layernorm_backward(dn, p.vec(mlp::kLnGain), ln, grads->vec(mlp::kLnGain),
                                       grads->vec(mlp::kLnBias));
  grads->mat(mlp::kW1).noalias() += dh * x.transpose();
  grads->vec(mlp::kB1) += dh;
  return l;
}

double example_attention(const ModelSpec& spec, const Params& p, std::span<const double> x_raw,
                         int label, Grads* grads, Vector* logits_out) {
  const auto S = static_cast<Eigen::Index>(spec.seq_len);
  const auto H = static_cast<Eigen::Index>(spec.hidden_dim);
  const auto D = static_cast<Eigen::Index>(spec.input_dim);
  const double inv_sqrt_h = 1.0 / std::sqrt(static_cast<double>(H));
  const ConstMatrixMap X(x_raw.data(), S, D);

  // Forward.
  Matrix E = X * p.mat(attn::kEmbed).transpose();
  E.rowwise() += p.vec(attn::kEmbedBias).transpose();
  Matrix U;
  std::vector<LayerNormCache> ln1;
  row_layernorm_forward(E, p.vec(attn::kLn1Gain), p.vec(attn::kLn1Bias), spec.layernorm_epsilon, U, ln1);
  const Matrix QKV = U * p.mat(attn::kWqkv).transpose();
  const Matrix Q = QKV.leftCols(H);
  const Matrix K = QKV.middleCols(H, H);
  const Matrix V = QKV.rightCols(H);
  Matrix A = (Q * K.transpose()) * inv_sqrt_h;
  for (Eigen::Index s = 0; s < S; ++s) {
    const double m = A.row(s).maxCoeff();
    A.row(s) = (A.row(s).array() - m).exp();
    A.row(s) /= A.row(s).sum();
  }
  const Matrix O = A * V;
  const Matrix R = E + O * p.mat(attn::kWf).transpose();
  Matrix M;
  std::vector<LayerNormCache> ln2;
  row_layernorm_forward(R, p.vec(attn::kLn2Gain), p.vec(attn::kLn2Bias), spec.layernorm_epsilon, M, ln2);
  Matrix Z1 = M * p.mat(attn::kW1).transpose();
  Z1.rowwise() += p.vec(attn::kW1Bias).transpose();
  const Matrix G = Z1.array().tanh().matrix();
  Matrix F = G * p.mat(attn::kW2).transpose();
  F.rowwise() += p.vec(attn::kW2Bias).transpose();
  const Matrix Y = R + F;
  const Vector pooled = Y.colwise().mean().transpose();
  const Vector logits = p.mat(attn::kHead) * pooled + p.vec(attn::kHeadBias);
  if (logits_out) *logits_out = logits;
  Vector dlogits;
  const double l = cross_entropy(logits, label, grads ? &dlogits : nullptr);
  if (!grads) return l;

  // Backward.
  grads->mat(attn::kHead).noalias() += dlogits * pooled.transpose();
  grads->vec(attn::kHeadBias) += dlogits;
  const Vector dpooled = p.mat(attn::kHead).transpose() * dlogits;
  const Matrix dY = (dpooled / static_cast<double>(S)).transpose().replicate(S, 1);

  Matrix dR = dY;
  grads->mat(attn::kW2).noalias() += dY.transpose() * G;
  grads->vec(attn::kW2Bias) += dY.colwise().sum().transpose();
  const Matrix dG = dY * p.mat(attn::kW2);
  const Matrix dZ1 = (dG.array() * (1.0 - G.array().square())).matrix();
  grads->mat(attn::kW1).noalias() += dZ1.transpose() * M;
  grads->vec(attn::kW1Bias) += dZ1.colwise().sum().transpose();
  const Matrix dM = dZ1 * p.mat(attn::kW1);
  dR += row_layernorm_backward(dM, p.vec(attn::kLn2Gain), ln2, grads->vec(attn::kLn2Gain),
                               grads->vec(attn::kLn2Bias));

  Matrix dE = dR;
  grads->mat(attn::kWf).noalias() += dR.transpose() * O;
  const Matrix dO = dR * p.mat(attn::kWf);
  const Matrix dA = dO * V.transpose();
  const Matrix dV = A.transpose() * dO;
  Matrix dScores(S, S);
  for (Eigen::Index s = 0; s < S; ++s) {
    const double inner = dA.row(s).dot(A.row(s));
    dScores.row(s) = A.row(s).array() * (dA.row(s).array() - inner);
  }
  dScores *= inv_sqrt_h;
  Matrix dQKV(S, 3 * H);
  dQKV.leftCols(H) = dScores * K;
  dQKV.middleCols(H, H) = dScores.transpose() * Q;
  dQKV.rightCols(H) = dV;
  grads->mat(attn::kWqkv).noalias() += dQKV.transpose() * U;
  const Matrix dU = dQKV * p.mat(attn::kWqkv);
  dE += row_layernorm_backward(dU, p.vec(attn::kLn1Gain), ln1, grads->vec(attn::kLn1Gain),
                               grads->vec(attn::kLn1Bias));

  grads->mat(attn::kEmbed).noalias() += dE.transpose() * X;
  grads->vec(attn::kEmbedBias) += dE.colwise().sum().transpose();
  return l;
}

using ExampleFn = double (*)(const ModelSpec&, const Params&, std::span<const double>, int, Grads*,
                             Vector*);

ExampleFn example_fn(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLinearSoftmax: return &example_linear;
    case ModelKind::kMlpLayerNorm: return &example_mlp;
    case ModelKind::kTinyAttention: return &example_attention;
  }
  throw ConfigError("model.kind", "unknown model kind");
}

ParamTree zeros_for(const std::vector<LayerShape>& shapes) {
  std::vector<Layer> layers;
  layers.reserve(shapes.size());
  for (const auto& shape : shapes) layers.push_back({shape.name, std::vector<double>(shape.size(), 0.0)});
  return ParamTree(std::move(layers));
}

void check_inputs(const ModelSpec& spec, const std::vector<LayerShape>& shapes,
                  const ParamTree& params, const Batch& batch) {
  if (batch.empty()) throw StructuralError("batch is empty");
  if (batch.example_dim != spec.example_dim())
    throw StructuralError("batch example_dim " + std::to_string(batch.example_dim) +
                          " does not match model example_dim " + std::to_string(spec.example_dim()));
  if (batch.features.size() != batch.example_dim * batch.size())
    throw StructuralError("batch features size does not match labels");
  if (params.num_layers() != shapes.size())
    throw StructuralError("parameter tree has " + std::to_string(params.num_layers()) +
                          " layers, model layout has " + std::to_string(shapes.size()));
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& layer = params.layer(i);
    if (layer.name != shapes[i].name || layer.dim() != shapes[i].size())
      throw StructuralError("parameter layer " + std::to_string(i) + " ('" + layer.name + "'[" +
                            std::to_string(layer.dim()) + "]) does not match layout '" +
                            shapes[i].name + "'[" + std::to_string(shapes[i].size()) + "]");
  }
  for (int label : batch.labels)
    if (label < 0 || static_cast<std::size_t>(label) >= spec.num_classes)
      throw StructuralError("label " + std::to_string(label) + " out of range");
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLinearSoftmax: return "linear_softmax";
    case ModelKind::kMlpLayerNorm: return "mlp_layernorm";
    case ModelKind::kTinyAttention: return "tiny_attention";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "linear_softmax") return ModelKind::kLinearSoftmax;
  if (name == "mlp_layernorm") return ModelKind::kMlpLayerNorm;
  if (name == "tiny_attention") return ModelKind::kTinyAttention;
  throw ConfigError("model.kind", "unknown model kind '" + std::string(name) + "'");
}

std::size_t ModelSpec::example_dim() const noexcept {
  return kind == ModelKind::kTinyAttention ? seq_len * input_dim : input_dim;
}

void ModelSpec::validate() const {
  if (input_dim == 0) throw ConfigError("model.input_dim", "must be positive");
  if (num_classes < 2) throw ConfigError("model.num_classes", "must be at least 2");
  if (kind != ModelKind::kLinearSoftmax && hidden_dim == 0)
    throw ConfigError("model.hidden_dim", "must be positive");
  if (kind == ModelKind::kTinyAttention && seq_len == 0)
    throw ConfigError("model.seq_len", "must be positive");
  if (!(layernorm_epsilon > 0.0)) throw ConfigError("model.layernorm_epsilon", "must be positive");
}

void Batch::push_back(std::span<const double> x, int label) {
  if (x.size() != example_dim) throw StructuralError("example has wrong dimension");
  features.insert(features.end(), x.begin(), x.end());
  labels.push_back(label);
}

Batch select(const Batch& batch, std::span<const std::size_t> indices) {
  Batch out;
  out.example_dim = batch.example_dim;
  out.features.reserve(indices.size() * batch.example_dim);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(batch.example(i), batch.labels.at(i));
  return out;
}

std::vector<LayerShape> layout(const ModelSpec& spec) {
  using Init = LayerShape::Init;
  const std::size_t d = spec.input_dim, h = spec.hidden_dim, c = spec.num_classes;
  switch (spec.kind) {
    case ModelKind::kLinearSoftmax:
      return {{"w", c, d, Init::kWeight}, {"b", c, 1, Init::kZero}};
    case ModelKind::kMlpLayerNorm:
      return {{"w1", h, d, Init::kWeight},     {"b1", h, 1, Init::kZero},
              {"ln.gain", h, 1, Init::kOne},   {"ln.bias", h, 1, Init::kZero},
              {"w2", c, h, Init::kWeight},     {"b2", c, 1, Init::kZero}};
    case ModelKind::kTinyAttention:
      return {{"embed", h, d, Init::kWeight},   {"embed.bias", h, 1, Init::kZero},
              {"ln1.gain", h, 1, Init::kOne},   {"ln1.bias", h, 1, Init::kZero},
              {"wqkv", 3 * h, h, Init::kWeight}, {"wf", h, h, Init::kWeight},
              {"ln2.gain", h, 1, Init::kOne},   {"ln2.bias", h, 1, Init::kZero},
              {"w1", h, h, Init::kWeight},      {"w1.bias", h, 1, Init::kZero},
              {"w2", h, h, Init::kWeight},      {"w2.bias", h, 1, Init::kZero},
              {"head", c, h, Init::kWeight},    {"head.bias", c, 1, Init::kZero}};
  }
  throw ConfigError("model.kind", "unknown model kind");
}

ParamTree init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto shapes = layout(spec);
  std::vector<Layer> layers;
  layers.reserve(shapes.size());
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& shape = shapes[i];
    std::vector<double> values(shape.size(), 0.0);
    if (shape.init == LayerShape::Init::kOne) {
      std::fill(values.begin(), values.end(), 1.0);
    } else if (shape.init == LayerShape::Init::kWeight) {
      Rng rng(derive_seed(seed, {tag(Stream::kInit), i}));
      const double scale = 1.0 / std::sqrt(static_cast<double>(shape.cols));
      for (double& v : values) v = scale * rng.normal();
    }
    layers.push_back({shape.name, std::move(values)});
  }
  return ParamTree(std::move(layers));
}

LossAndGrad loss_and_grad(const ModelSpec& spec, const ParamTree& params, const Batch& batch) {
  const auto shapes = layout(spec);
  check_inputs(spec, shapes, params, batch);
  const Params p(shapes, params);
  LossAndGrad out{0.0, zeros_for(shapes)};
  Grads g(shapes, out.grad);
  const ExampleFn fn = example_fn(spec.kind);
  for (std::size_t i = 0; i < batch.size(); ++i) out.loss += fn(spec, p, batch.example(i), batch.labels[i], &g, nullptr);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv_n;
  for (std::size_t i = 0; i < out.grad.num_layers(); ++i)
    for (double& v : out.grad.values(i)) v *= inv_n;
  return out;
}

double loss(const ModelSpec& spec, const ParamTree& params, const Batch& batch) {
  const auto shapes = layout(spec);
  check_inputs(spec, shapes, params, batch);
  const Params p(shapes, params);
  const ExampleFn fn = example_fn(spec.kind);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) total += fn(spec, p, batch.example(i), batch.labels[i], nullptr, nullptr);
  return total / static_cast<double>(batch.size());
}

ParamTree grad(const ModelSpec& spec, const ParamTree& params, const Batch& batch) {
  return loss_and_grad(spec, params, batch).grad;
}

double accuracy(const ModelSpec& spec, const ParamTree& params, const Batch& batch) {
  const auto shapes = layout(spec);
  check_inputs(spec, shapes, params, batch);
  const Params p(shapes, params);
  const ExampleFn fn = example_fn(spec.kind);
  std::size_t correct = 0;
  Vector logits;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    fn(spec, p, batch.example(i), batch.labels[i], nullptr, &logits);
    Eigen::Index arg = 0;
    logits.maxCoeff(&arg);
    if (arg == batch.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(batch.size());
}

ParamTree finite_diff_grad(const ModelSpec& spec, const ParamTree& params, const Batch& batch,
                           double h) {
  if (!(h > 0.0)) throw DomainError("finite difference step must be positive");
  ParamTree out = ParamTree::zeros_like(params);
  ParamTree probe = params;
  for (std::size_t i = 0; i < params.num_layers(); ++i) {
    auto values = probe.values(i);
    auto dst = out.values(i);
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double original = values[k];
      values[k] = original + h;
      const double plus = loss(spec, probe, batch);
      values[k] = original - h;
      const double minus = loss(spec, probe, batch);
      values[k] = original;
      dst[k] = (plus - minus) / (2.0 * h);
    }
  }
  return out;
}

}  // namespace fldp
