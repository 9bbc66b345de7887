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

// Small simulation setups shared by the engine and acceptance tests.

#ifndef FLDP_TESTS_FIXTURES_HPP_
#define FLDP_TESTS_FIXTURES_HPP_

#include <cstdint>

#include "fldp/data_synth.hpp"
#include "fldp/fed_engine.hpp"
#include "fldp/models.hpp"

namespace fldp::fixtures {

/// Fills the privacy block from the rest of the config, the way the config
/// parser does, so validate() accepts it.
inline void sync_privacy(FederationConfig& cfg, std::size_t population_size, double sigma,
                         NoiseKind kind = NoiseKind::kClient) {
  auto& p = cfg.privacy;
  p.clip_bound = cfg.clip.bound;
  p.sigma = sigma;
  p.sigma_kind = kind;
  p.population = population_size;
  p.steps = cfg.rounds;
  const double n = static_cast<double>(population_size);
  if (cfg.cohort.mode == CohortMode::kFixedSize) {
    p.cohort_size = static_cast<double>(cfg.cohort.size);
    p.sampling_rate = p.cohort_size / n;
  } else {
    p.sampling_rate = cfg.cohort.rate;
    p.cohort_size = cfg.cohort.rate * n;
  }
}

inline PopulationSpec small_population(std::uint64_t seed, std::size_t clients = 20) {
  PopulationSpec s;
  s.num_clients = clients;
  s.examples_per_client = {CountKind::kUniform, 12};
  s.label_skew_alpha = 1.0;
  s.num_classes = 3;
  s.input_dim = 4;
  s.noise_level = 1.0;
  s.class_separation = 2.0;
  s.probe_size = 128;
  s.seed = seed;
  return s;
}

inline ModelSpec small_mlp(const PopulationSpec& pop) {
  return {ModelKind::kMlpLayerNorm, pop.input_dim, 6, pop.num_classes, 1, 1e-5};
}

inline FederationConfig small_federation(std::size_t population_size, std::int64_t rounds,
                                         std::uint64_t seed) {
  FederationConfig cfg;
  cfg.rounds = rounds;
  cfg.cohort = {CohortMode::kFixedSize, 5, 0.0};
  cfg.local = {LocalMode::kEpochs, 1, 4, 0.1, 1.0};
  cfg.clip = {0.5, ClipVariant::kGlobal, {}};
  cfg.central.optimizer = OptimizerKind::kSgd;
  cfg.central.schedule = {1.0, ScheduleKind::kConstant, 0, 1.0, 1};
  cfg.seed = seed;
  sync_privacy(cfg, population_size, 0.01);
  return cfg;
}

}  // namespace fldp::fixtures

#endif  // FLDP_TESTS_FIXTURES_HPP_
