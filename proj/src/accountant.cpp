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

#include "fldp/accountant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fldp/errors.hpp"

namespace fldp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  if (hi == -kInf) return -kInf;
  return hi + std::log1p(std::exp(lo - hi));
}

// log(exp(a) - exp(b)); -inf when the difference is not positive.
double log_sub(double a, double b) {
  if (b == -kInf) return a;
  if (b >= a) return -kInf;
  return a + std::log1p(-std::exp(b - a));
}

double log_erfc(double x) {
  if (x < 20.0) return std::log(std::erfc(x));
  // Asymptotic series; erfc underflows near x = 27.
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / (2.0 * x2) + 3.0 / (4.0 * x2 * x2) - 15.0 / (8.0 * x2 * x2 * x2);
  return -x2 - std::log(x) - 0.5 * std::log(std::numbers::pi) + std::log(series);
}

double log_a_integer(double z, double q, std::int64_t alpha) {
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double a = static_cast<double>(alpha);
  double acc = -kInf;
  for (std::int64_t i = 0; i <= alpha; ++i) {
    const double di = static_cast<double>(i);
    const double log_coef = std::lgamma(a + 1.0) - std::lgamma(di + 1.0) - std::lgamma(a - di + 1.0);
    const double term = log_coef + di * log_q + (a - di) * log_1mq + (di * di - di) / (2.0 * z * z);
    acc = log_add(acc, term);
  }
  return acc;
}

double log_a_fractional(double z, double q, double alpha) {
  double log_a0 = -kInf;
  double log_a1 = -kInf;
  const double z0 = z * z * std::log(1.0 / q - 1.0) + 0.5;
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double root2z = std::numbers::sqrt2 * z;
  // Generalized binomial coefficient C(alpha, i), tracked as sign and log magnitude.
  double log_coef = 0.0;
  bool positive = true;
  for (int i = 0;; ++i) {
    if (i > 0) {
      const double factor = (alpha - static_cast<double>(i) + 1.0) / static_cast<double>(i);
      if (factor == 0.0) break;
      if (factor < 0.0) positive = !positive;
      log_coef += std::log(std::abs(factor));
    }
    const double di = static_cast<double>(i);
    const double dj = alpha - di;
    const double log_t0 = log_coef + di * log_q + dj * log_1mq;
    const double log_t1 = log_coef + dj * log_q + di * log_1mq;
    const double log_e0 = std::log(0.5) + log_erfc((di - z0) / root2z);
    const double log_e1 = std::log(0.5) + log_erfc((z0 - dj) / root2z);
    const double log_s0 = log_t0 + (di * di - di) / (2.0 * z * z) + log_e0;
    const double log_s1 = log_t1 + (dj * dj - dj) / (2.0 * z * z) + log_e1;
    if (positive) {
      log_a0 = log_add(log_a0, log_s0);
      log_a1 = log_add(log_a1, log_s1);
    } else {
      log_a0 = log_sub(log_a0, log_s0);
      log_a1 = log_sub(log_a1, log_s1);
    }
    if (std::max(log_s0, log_s1) < -30.0) break;
    if (i > 100000) throw NumericalError("fractional RDP series did not converge");
  }
  return log_add(log_a0, log_a1);
}

}  // namespace

std::vector<double> default_orders() {
  std::vector<double> orders;
  for (int i = 1; i <= 9; ++i) orders.push_back(1.0 + i / 10.0);
  for (int a = 2; a <= 64; ++a) orders.push_back(a);
  orders.push_back(128.0);
  orders.push_back(256.0);
  return orders;
}

double RdpCurve::total(std::size_t i) const {
  if (steps == 0) return 0.0;
  return static_cast<double>(steps) * eps_per_step.at(i);
}

double log_a(double z, double q, double order) {
  if (!(order > 1.0)) throw DomainError("Renyi order must be > 1, got " + std::to_string(order));
  if (!(z > 0.0)) throw DomainError("noise multiplier must be positive");
  if (!(q > 0.0 && q <= 1.0)) throw DomainError("sampling rate must be in (0, 1]");
  if (q == 1.0) return (order - 1.0) * order / (2.0 * z * z);
  if (order == std::floor(order) && order < 1e6)
    return log_a_integer(z, q, static_cast<std::int64_t>(order));
  return log_a_fractional(z, q, order);
}

RdpCurve rdp_sampled_gaussian(double z, double q, std::span<const double> orders) {
  RdpCurve curve;
  curve.orders.assign(orders.begin(), orders.end());
  curve.eps_per_step.reserve(orders.size());
  for (double order : orders) {
    const double value = log_a(z, q, order) / (order - 1.0);
    // Rounding can push the exact-zero limit slightly negative.
    curve.eps_per_step.push_back(std::max(0.0, value));
  }
  curve.steps = 1;
  return curve;
}

RdpCurve compose(const RdpCurve& curve, std::int64_t steps) {
  if (steps < 0) throw DomainError("step count must be >= 0");
  RdpCurve out = curve;
  out.steps = curve.steps * steps;
  return out;
}

std::string_view to_string(Conversion c) {
  return c == Conversion::kClassic ? "classic" : "improved";
}

Conversion parse_conversion(std::string_view name) {
  if (name == "classic") return Conversion::kClassic;
  if (name == "improved") return Conversion::kImproved;
  throw ConfigError("accountant.conversion", "unknown conversion '" + std::string(name) + "'");
}

EpsilonResult epsilon_at_delta(const RdpCurve& curve, double delta, Conversion conversion) {
  if (curve.orders.empty()) throw ConfigError("accountant.orders", "order grid is empty");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must be in (0, 1)");
  const double log_delta = std::log(delta);
  EpsilonResult best{kInf, curve.orders.front()};
  for (std::size_t i = 0; i < curve.orders.size(); ++i) {
    const double alpha = curve.orders[i];
    const double rdp = curve.total(i);
    if (!std::isfinite(rdp)) continue;
    double eps;
    if (conversion == Conversion::kClassic) {
      eps = rdp - log_delta / (alpha - 1.0);
    } else {
      eps = rdp + std::log1p(-1.0 / alpha) - (log_delta + std::log(alpha)) / (alpha - 1.0);
    }
    if (eps < best.epsilon) best = {eps, alpha};
  }
  best.epsilon = std::max(0.0, best.epsilon);
  return best;
}

EpsilonResult compute_epsilon(double z, double q, std::int64_t steps, double delta,
                              std::span<const double> orders, Conversion conversion) {
  if (orders.empty()) throw ConfigError("accountant.orders", "order grid is empty");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must be in (0, 1)");
  if (steps == 0 || q == 0.0) return {0.0, orders.front()};
  if (z == 0.0) return {kInf, 0.0};
  return epsilon_at_delta(compose(rdp_sampled_gaussian(z, q, orders), steps), delta, conversion);
}

double calibrate_noise(double target_epsilon, double q, std::int64_t steps, double delta,
                       double tolerance, std::span<const double> orders,
                       CalibrationBracket bracket, Conversion conversion) {
  if (!(target_epsilon > 0.0) || !std::isfinite(target_epsilon))
    throw DomainError("target epsilon must be positive and finite");
  if (!(tolerance > 0.0)) throw DomainError("tolerance must be positive");
  if (!(bracket.z_low > 0.0 && bracket.z_high > bracket.z_low))
    throw DomainError("invalid calibration bracket");
  auto eps = [&](double z) { return compute_epsilon(z, q, steps, delta, orders, conversion).epsilon; };
  const double eps_low = eps(bracket.z_low);
  const double eps_high = eps(bracket.z_high);
  auto close = [&](double e) { return std::abs(e - target_epsilon) <= tolerance * target_epsilon; };
  if (close(eps_high)) return bracket.z_high;
  if (close(eps_low)) return bracket.z_low;
  if (target_epsilon > eps_low || target_epsilon < eps_high) {
    throw CalibrationError("target epsilon " + std::to_string(target_epsilon) +
                               " not reachable for z in [" + std::to_string(bracket.z_low) + ", " +
                               std::to_string(bracket.z_high) + "] (epsilon spans [" +
                               std::to_string(eps_high) + ", " + std::to_string(eps_low) + "])",
                           bracket, eps_low, eps_high);
  }
  double lo = std::log(bracket.z_low);
  double hi = std::log(bracket.z_high);
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double e = eps(std::exp(mid));
    if (close(e)) return std::exp(mid);
    // eps decreases in z: too much privacy loss means more noise is needed.
    if (e > target_epsilon) lo = mid;
    else hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

PrivacyReport privacy_report(const PrivacyParams& p, std::span<const double> orders,
                             Conversion conversion, bool dp_valid) {
  PrivacyReport r;
  const double cohort = p.expected_cohort();
  r.sigma_client = cohort >= 1.0 ? p.sigma_as(NoiseKind::kClient) : p.sigma;
  r.sigma_avg = cohort >= 1.0 ? p.sigma_as(NoiseKind::kAvg) : p.sigma;
  r.sigma_sum = cohort >= 1.0 ? p.sigma_as(NoiseKind::kSum) : p.sigma;
  r.sampling_rate = p.sampling_rate;
  r.steps = p.steps;
  r.delta = p.delta;
  r.conversion = conversion;
  r.dp_valid = dp_valid;
  if (p.sampling_rate > 0.0 && p.clip_bound > 0.0 && cohort > 0.0) {
    r.sensitivity = p.sensitivity();
    r.noise_multiplier = std::isfinite(p.clip_bound) ? noise_multiplier(p) : 0.0;
  }
  const auto result = compute_epsilon(r.noise_multiplier, p.sampling_rate, p.steps, p.delta,
                                      orders, conversion);
  // A partial noise mask keeps the nominal figure; dp_valid carries the caveat.
  r.epsilon = result.epsilon;
  r.best_order = result.best_order;
  return r;
}

}  // namespace fldp
