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

#include "fldp/dp_mechanism.hpp"

#include <cmath>

#include "fldp/errors.hpp"
#include "fldp/rng.hpp"

namespace fldp {

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kClient: return "client";
    case NoiseKind::kAvg: return "avg";
    case NoiseKind::kSum: return "sum";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "client") return NoiseKind::kClient;
  if (name == "avg") return NoiseKind::kAvg;
  if (name == "sum") return NoiseKind::kSum;
  throw ConfigError("privacy.sigma_kind", "unknown noise parametrization '" + std::string(name) + "'");
}

double convert_noise(double sigma, NoiseKind from, NoiseKind to, double cohort_size) {
  if (!(cohort_size >= 1.0)) throw DomainError("cohort size must be >= 1");
  if (!(sigma >= 0.0)) throw DomainError("sigma must be >= 0");
  if (from == to) return sigma;
  double avg = sigma;
  if (from == NoiseKind::kClient) avg = sigma / std::sqrt(cohort_size);
  if (from == NoiseKind::kSum) avg = sigma / cohort_size;
  if (to == NoiseKind::kClient) return avg * std::sqrt(cohort_size);
  if (to == NoiseKind::kSum) return avg * cohort_size;
  return avg;
}

double PrivacyParams::expected_cohort() const {
  return cohort_size > 0.0 ? cohort_size : sampling_rate * static_cast<double>(population);
}

double PrivacyParams::sigma_as(NoiseKind kind) const {
  return convert_noise(sigma, sigma_kind, kind, expected_cohort());
}

double PrivacyParams::sensitivity() const {
  const double qn = expected_cohort();
  if (!(qn > 0.0)) throw DomainError("expected cohort size qN must be positive");
  return clip_bound / qn;
}

double noise_multiplier(const PrivacyParams& p) {
  if (!(p.sampling_rate > 0.0)) throw DomainError("sampling rate q must be positive");
  if (!(p.clip_bound > 0.0)) throw DomainError("clipping bound C must be positive");
  if (p.sigma == 0.0) return 0.0;
  return p.sigma_as(NoiseKind::kAvg) * p.expected_cohort() / p.clip_bound;
}

bool NoiseMask::includes(std::string_view name) const {
  return !included_layers || included_layers->count(std::string(name)) > 0;
}

bool NoiseMask::covers(const ParamTree& t) const {
  if (!included_layers) return true;
  for (const auto& layer : t.layers())
    if (!included_layers->count(layer.name)) return false;
  return true;
}

void NoiseMask::validate(const ParamTree& t) const {
  if (!included_layers) return;
  for (const auto& name : *included_layers)
    if (!t.find(name)) throw StructuralError("noise mask names unknown layer '" + name + "'");
}

ParamTree add_noise(const ParamTree& delta, double sigma_client, const NoiseMask& mask,
                    std::uint64_t seed) {
  if (!(sigma_client >= 0.0)) throw DomainError("sigma_client must be >= 0");
  mask.validate(delta);
  if (sigma_client == 0.0) return delta;
  ParamTree out = delta;
  for (std::size_t i = 0; i < out.num_layers(); ++i) {
    if (!mask.includes(out.layer(i).name)) continue;
    Rng rng(derive_seed(seed, {tag(Stream::kNoise), i}));
    for (double& v : out.values(i)) v += sigma_client * rng.normal();
  }
  return out;
}

}  // namespace fldp
