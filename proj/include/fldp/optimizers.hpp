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

#ifndef FLDP_OPTIMIZERS_HPP_
#define FLDP_OPTIMIZERS_HPP_

#include <cstdint>
#include <string_view>

#include "fldp/param_tree.hpp"

namespace fldp {

enum class ScheduleKind { kConstant, kExponentialDecay, kStepDecay };

std::string_view to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);

/// Learning rate as a function of the central step.
struct Schedule {
  double base_lr = 1.0;
  ScheduleKind kind = ScheduleKind::kConstant;
  std::int64_t decay_start = 0;
  double decay_rate = 1.0;
  std::int64_t transition_steps = 1;

  void validate() const;
  bool operator==(const Schedule&) const = default;
};

/// Constant: base_lr.
/// ExponentialDecay: base_lr * rate^((t - start) / transition) once t >= start.
/// StepDecay: same with the exponent floored.
double lr_at(const Schedule& schedule, std::int64_t step);

enum class OptimizerKind { kSgd, kAdam, kAdaGrad, kLars, kLamb };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view name);

struct OptimizerHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-6;
  double momentum = 0.0;
  double weight_decay = 0.0;
  /// Upper bound on the LARS/LAMB trust ratio; <= 0 leaves it unbounded.
  double trust_clip = 0.0;

  bool operator==(const OptimizerHyper&) const = default;
};

/**
 * Optimizer state for one parameter tree.
 *
 * first_moment holds the momentum buffer (SGD, LARS) or Adam's m (Adam,
 * LAMB); second_moment holds Adam's v or AdaGrad's accumulator. Both are
 * congruent with the parameters.
 */
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kSgd;
  std::int64_t step_count = 0;
  ParamTree first_moment;
  ParamTree second_moment;
  OptimizerHyper hyper;
};

OptimizerState make_optimizer_state(OptimizerKind kind, const OptimizerHyper& hyper,
                                    const ParamTree& params);

struct OptimizerStep {
  ParamTree params;
  OptimizerState state;
};

/**
 * One optimizer update, returning new parameters and state.
 *
 * LARS scales each layer's (weight-decayed) gradient by ||theta_i|| / ||g_i||;
 * LAMB computes the bias-corrected Adam direction r_i and scales it by
 * ||theta_i|| / ||r_i||. A layer whose parameter or direction norm is zero
 * uses a trust ratio of 1.
 */
OptimizerStep apply(const OptimizerState& state, const ParamTree& params, const ParamTree& grad,
                    double lr);

/// Trust ratio with the zero-norm guard and optional upper clip.
double trust_ratio(double param_norm, double update_norm, double trust_clip);

}  // namespace fldp

#endif  // FLDP_OPTIMIZERS_HPP_
