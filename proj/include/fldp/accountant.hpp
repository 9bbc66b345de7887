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

// Renyi-DP accountant for the Poisson-subsampled Gaussian mechanism.
//
// For noise multiplier z and sampling rate q the mechanism at order alpha has
//   eps(alpha) = log A_alpha / (alpha - 1),
//   A_alpha    = E_{x ~ N(0, z^2)} [ ((1 - q) + q exp((2x - 1) / (2 z^2)))^alpha ].
// Integer orders use the binomial expansion of A_alpha; fractional orders use
// the two-sided series with erfc tails. Both are evaluated in log space.
// Composition over T steps multiplies eps(alpha) by T, and the result is
// converted to (epsilon, delta)-DP by minimizing over the order grid.

#ifndef FLDP_ACCOUNTANT_HPP_
#define FLDP_ACCOUNTANT_HPP_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fldp/dp_mechanism.hpp"
#include "fldp/errors.hpp"

namespace fldp {

/// {1.1, ..., 1.9} U {2, ..., 64} U {128, 256}.
std::vector<double> default_orders();

struct RdpCurve {
  std::vector<double> orders;
  std::vector<double> eps_per_step;
  std::int64_t steps = 1;

  /// steps * eps_per_step[i].
  double total(std::size_t i) const;
};

/// Per-step RDP of the subsampled Gaussian. Requires z > 0, 0 < q <= 1 and
/// every order > 1 (DomainError otherwise). q == 1 gives alpha / (2 z^2).
RdpCurve rdp_sampled_gaussian(double noise_multiplier, double sampling_rate,
                              std::span<const double> orders);

/// log A_alpha for one order, exposed for testing.
double log_a(double noise_multiplier, double sampling_rate, double order);

/// T-fold composition: eps_per_step unchanged, steps multiplied by T.
RdpCurve compose(const RdpCurve& curve, std::int64_t steps);

enum class Conversion {
  /// eps(alpha) + log(1/delta) / (alpha - 1).
  kClassic,
  /// eps(alpha) + log((alpha - 1) / alpha) - (log delta + log alpha) / (alpha - 1);
  /// never larger than kClassic.
  kImproved,
};

std::string_view to_string(Conversion c);
Conversion parse_conversion(std::string_view name);

struct EpsilonResult {
  double epsilon = 0.0;
  double best_order = 0.0;
};

/// Minimizes the conversion over the curve's orders. Requires 0 < delta < 1
/// and a non-empty grid.
EpsilonResult epsilon_at_delta(const RdpCurve& curve, double delta,
                               Conversion conversion = Conversion::kImproved);

/// Convenience: accountant for (z, q, T, delta). z == 0 gives +inf, T == 0 gives 0.
EpsilonResult compute_epsilon(double noise_multiplier, double sampling_rate, std::int64_t steps,
                              double delta, std::span<const double> orders,
                              Conversion conversion = Conversion::kImproved);

struct CalibrationBracket {
  double z_low = 1e-3;
  double z_high = 1e3;
};

/// Thrown when the target epsilon is not reachable inside the bracket.
class CalibrationError : public DomainError {
 public:
  CalibrationError(const std::string& what, CalibrationBracket bracket, double eps_at_low,
                   double eps_at_high)
      : DomainError(what), bracket_(bracket), eps_at_low_(eps_at_low), eps_at_high_(eps_at_high) {}

  CalibrationBracket bracket() const noexcept { return bracket_; }
  double eps_at_low() const noexcept { return eps_at_low_; }
  double eps_at_high() const noexcept { return eps_at_high_; }

 private:
  CalibrationBracket bracket_;
  double eps_at_low_;
  double eps_at_high_;
};

/// Smallest-known z with |eps(z) - target| <= tolerance * target, by bisection
/// on log z. target must be positive and finite.
double calibrate_noise(double target_epsilon, double sampling_rate, std::int64_t steps,
                       double delta, double tolerance, std::span<const double> orders,
                       CalibrationBracket bracket = {},
                       Conversion conversion = Conversion::kImproved);

/// Everything the engine reports about a run's privacy.
struct PrivacyReport {
  double sigma_client = 0.0;
  double sigma_avg = 0.0;
  double sigma_sum = 0.0;
  double sensitivity = 0.0;
  double noise_multiplier = 0.0;
  double sampling_rate = 0.0;
  std::int64_t steps = 0;
  double delta = 0.0;
  double epsilon = 0.0;
  double best_order = 0.0;
  Conversion conversion = Conversion::kImproved;
  bool dp_valid = true;
};

PrivacyReport privacy_report(const PrivacyParams& p, std::span<const double> orders,
                             Conversion conversion = Conversion::kImproved,
                             bool dp_valid = true);

}  // namespace fldp

#endif  // FLDP_ACCOUNTANT_HPP_
