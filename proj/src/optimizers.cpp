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

#include "fldp/optimizers.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "fldp/errors.hpp"

namespace fldp {

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::kConstant: return "constant";
    case ScheduleKind::kExponentialDecay: return "exponential_decay";
    case ScheduleKind::kStepDecay: return "step_decay";
  }
  return "unknown";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "constant") return ScheduleKind::kConstant;
  if (name == "exponential_decay") return ScheduleKind::kExponentialDecay;
  if (name == "step_decay") return ScheduleKind::kStepDecay;
  throw ConfigError("schedule.kind", "unknown schedule '" + std::string(name) + "'");
}

void Schedule::validate() const {
  if (!(base_lr >= 0.0) || !std::isfinite(base_lr)) throw ConfigError("schedule.base_lr", "must be finite and >= 0");
  if (!(decay_rate > 0.0 && decay_rate <= 1.0)) throw ConfigError("schedule.decay_rate", "must be in (0, 1]");
  if (transition_steps <= 0) throw ConfigError("schedule.transition_steps", "must be positive");
  if (decay_start < 0) throw ConfigError("schedule.decay_start", "must be >= 0");
}

double lr_at(const Schedule& s, std::int64_t step) {
  if (s.kind == ScheduleKind::kConstant || step < s.decay_start) return s.base_lr;
  const double elapsed = static_cast<double>(step - s.decay_start) / static_cast<double>(s.transition_steps);
  const double exponent = s.kind == ScheduleKind::kStepDecay ? std::floor(elapsed) : elapsed;
  return s.base_lr * std::pow(s.decay_rate, exponent);
}

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kAdaGrad: return "adagrad";
    case OptimizerKind::kLars: return "lars";
    case OptimizerKind::kLamb: return "lamb";
  }
  return "unknown";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "adagrad") return OptimizerKind::kAdaGrad;
  if (name == "lars") return OptimizerKind::kLars;
  if (name == "lamb") return OptimizerKind::kLamb;
  throw ConfigError("optimizer.kind", "unknown optimizer '" + std::string(name) + "'");
}

OptimizerState make_optimizer_state(OptimizerKind kind, const OptimizerHyper& hyper,
                                    const ParamTree& params) {
  return {kind, 0, ParamTree::zeros_like(params), ParamTree::zeros_like(params), hyper};
}

double trust_ratio(double param_norm, double update_norm, double trust_clip) {
  if (param_norm == 0.0 || update_norm == 0.0) return 1.0;
  const double ratio = param_norm / update_norm;
  return trust_clip > 0.0 ? std::min(ratio, trust_clip) : ratio;
}

namespace {

void check_state(const OptimizerState& state, const ParamTree& params, const ParamTree& grad) {
  params.require_congruent(grad, "optimizer gradient");
  params.require_congruent(state.first_moment, "optimizer first moment");
  params.require_congruent(state.second_moment, "optimizer second moment");
}

}  // namespace

OptimizerStep apply(const OptimizerState& state, const ParamTree& params, const ParamTree& grad,
                    double lr) {
  check_state(state, params, grad);
  OptimizerStep out{params, state};
  out.state.step_count = state.step_count + 1;
  const auto& hp = state.hyper;
  const double t = static_cast<double>(out.state.step_count);
  const double bias1 = 1.0 - std::pow(hp.beta1, t);
  const double bias2 = 1.0 - std::pow(hp.beta2, t);

  for (std::size_t layer = 0; layer < params.num_layers(); ++layer) {
    auto theta = out.params.values(layer);
    auto m = out.state.first_moment.values(layer);
    auto v = out.state.second_moment.values(layer);
    const auto g = grad.values(layer);
    const auto theta0 = params.values(layer);
    const std::size_t n = theta.size();

    switch (state.kind) {
      case OptimizerKind::kSgd:
        for (std::size_t k = 0; k < n; ++k) {
          const double gk = g[k] + hp.weight_decay * theta0[k];
          m[k] = hp.momentum * m[k] + gk;
          theta[k] -= lr * (hp.momentum == 0.0 ? gk : m[k]);
        }
        break;

      case OptimizerKind::kAdam:
        for (std::size_t k = 0; k < n; ++k) {
          const double gk = g[k];
          m[k] = hp.beta1 * m[k] + (1.0 - hp.beta1) * gk;
          v[k] = hp.beta2 * v[k] + (1.0 - hp.beta2) * gk * gk;
          const double m_hat = m[k] / bias1;
          const double v_hat = v[k] / bias2;
          theta[k] -= lr * (m_hat / (std::sqrt(v_hat) + hp.epsilon) + hp.weight_decay * theta0[k]);
        }
        break;

      case OptimizerKind::kAdaGrad:
        for (std::size_t k = 0; k < n; ++k) {
          const double gk = g[k] + hp.weight_decay * theta0[k];
          v[k] += gk * gk;
          theta[k] -= lr * gk / (std::sqrt(v[k]) + hp.epsilon);
        }
        break;

      case OptimizerKind::kLars: {
        std::vector<double> direction(n);
        for (std::size_t k = 0; k < n; ++k) direction[k] = g[k] + hp.weight_decay * theta0[k];
        const double ratio = trust_ratio(std::sqrt(sum_squares(theta0)),
                                         std::sqrt(sum_squares(direction)), hp.trust_clip);
        for (std::size_t k = 0; k < n; ++k) {
          m[k] = hp.momentum * m[k] + ratio * direction[k];
          theta[k] -= lr * m[k];
        }
        break;
      }

      case OptimizerKind::kLamb: {
        std::vector<double> direction(n);
        for (std::size_t k = 0; k < n; ++k) {
          const double gk = g[k];
          m[k] = hp.beta1 * m[k] + (1.0 - hp.beta1) * gk;
          v[k] = hp.beta2 * v[k] + (1.0 - hp.beta2) * gk * gk;
          direction[k] = (m[k] / bias1) / (std::sqrt(v[k] / bias2) + hp.epsilon) +
                         hp.weight_decay * theta0[k];
        }
        const double ratio = trust_ratio(std::sqrt(sum_squares(theta0)),
                                         std::sqrt(sum_squares(direction)), hp.trust_clip);
        for (std::size_t k = 0; k < n; ++k) theta[k] -= lr * ratio * direction[k];
        break;
      }
    }
  }
  return out;
}

}  // namespace fldp
