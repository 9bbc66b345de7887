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

// Gaussian mechanism on client deltas.
//
// Noise scale has three equivalent parametrizations for a cohort of L clients
// whose deltas are averaged:
//   client  std of the noise each client adds to its own delta
//   avg     std of the resulting noise on the averaged delta
//   sum     std of the noise on the summed deltas
// related by sigma_client = sigma_avg * sqrt(L) and sigma_sum = sigma_avg * L.
// With sensitivity S = C / (qN) the accountant consumes z = sigma_avg / S.

#ifndef FLDP_DP_MECHANISM_HPP_
#define FLDP_DP_MECHANISM_HPP_

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "fldp/param_tree.hpp"

namespace fldp {

enum class NoiseKind { kClient, kAvg, kSum };

std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view name);

/// Exact conversion between noise parametrizations for cohort size L >= 1.
double convert_noise(double sigma, NoiseKind from, NoiseKind to, double cohort_size);

struct PrivacyParams {
  double clip_bound = 0.0;   ///< C
  double sigma = 0.0;
  NoiseKind sigma_kind = NoiseKind::kAvg;
  double sampling_rate = 0.0;      ///< q
  std::uint64_t population = 0;    ///< N
  /// Expected cohort size L = qN. When zero, q * N is used.
  double cohort_size = 0.0;
  std::int64_t steps = 0;          ///< T
  double delta = 1e-9;

  double expected_cohort() const;
  double sigma_as(NoiseKind kind) const;
  /// S = C / (qN).
  double sensitivity() const;

  bool operator==(const PrivacyParams&) const = default;
};

/// z = sigma_avg * qN / C. Throws DomainError when q or C is zero.
double noise_multiplier(const PrivacyParams& p);

/**
 * Layers that receive noise. An unset mask means every layer (the standard
 * mechanism). A partial mask is an analysis tool only: the result is not
 * differentially private.
 */
struct NoiseMask {
  std::optional<std::set<std::string>> included_layers;

  static NoiseMask all() { return {}; }
  static NoiseMask only(std::set<std::string> names) { return {std::move(names)}; }

  bool includes(std::string_view name) const;
  /// True when the mask covers every layer of t.
  bool covers(const ParamTree& t) const;
  /// Throws StructuralError when a named layer is absent from t.
  void validate(const ParamTree& t) const;

  bool operator==(const NoiseMask&) const = default;
};

/// Adds N(0, sigma_client^2) to every coordinate of the masked layers.
/// Layer i draws from the stream derive_seed(seed, {noise, i}).
ParamTree add_noise(const ParamTree& delta, double sigma_client, const NoiseMask& mask,
                    std::uint64_t seed);

}  // namespace fldp

#endif  // FLDP_DP_MECHANISM_HPP_
