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

// Federated averaging with user-level differential privacy.
//
// Each central step t:
//   1. sample a cohort of clients;
//   2. every cohort member trains locally from the current model with SGD,
//      clipping each minibatch gradient to the local bound, and returns its
//      delta (final minus initial parameters);
//   3. each delta is clipped (globally or per layer) to the DP bound C and
//      receives Gaussian noise with std sigma_client;
//   4. the noised deltas are averaged in ascending client-id order, and the
//      negated mean is fed to the central optimizer as a pseudo-gradient.
//
// Rounds are sequential. Clients inside a round may run on several threads;
// every client draws from its own seed stream derived from (seed, round,
// client id), so results do not depend on the number of workers.

#ifndef FLDP_FED_ENGINE_HPP_
#define FLDP_FED_ENGINE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fldp/accountant.hpp"
#include "fldp/clipping.hpp"
#include "fldp/data_synth.hpp"
#include "fldp/dp_mechanism.hpp"
#include "fldp/models.hpp"
#include "fldp/optimizers.hpp"

namespace fldp {

enum class CohortMode { kFixedSize, kBernoulli };
enum class LocalMode { kEpochs, kSteps };

std::string_view to_string(CohortMode mode);
CohortMode parse_cohort_mode(std::string_view name);
std::string_view to_string(LocalMode mode);
LocalMode parse_local_mode(std::string_view name);

struct CohortConfig {
  CohortMode mode = CohortMode::kFixedSize;
  std::size_t size = 1;  ///< L, FixedSize
  double rate = 1.0;     ///< q, Bernoulli

  bool operator==(const CohortConfig&) const = default;
};

struct LocalConfig {
  LocalMode mode = LocalMode::kEpochs;
  std::size_t count = 1;  ///< epochs or steps
  std::size_t batch_size = 1;
  double lr = 0.1;
  /// Bound applied to every local minibatch gradient; may be +infinity.
  double clip = 1.0;

  bool operator==(const LocalConfig&) const = default;
};

struct CentralConfig {
  OptimizerKind optimizer = OptimizerKind::kSgd;
  OptimizerHyper hyper;
  Schedule schedule;

  bool operator==(const CentralConfig&) const = default;
};

struct FederationConfig {
  std::int64_t rounds = 0;  ///< T
  CohortConfig cohort;
  LocalConfig local;
  double fedprox_mu = 0.0;
  ClipSpec clip;
  PrivacyParams privacy;
  NoiseMask noise_mask;
  CentralConfig central;
  std::vector<double> orders = default_orders();
  Conversion conversion = Conversion::kImproved;
  std::uint64_t seed = 0;
  std::optional<ParamTree> seed_model;

  /// Throws ConfigError for invalid fields or inconsistent privacy parameters.
  void validate(std::size_t population_size) const;
  bool operator==(const FederationConfig&) const = default;
};

/// Cohort for one round, sorted ascending. FixedSize draws L distinct ids
/// uniformly; Bernoulli includes each id independently with probability q.
std::vector<std::size_t> sample_cohort(std::size_t population_size, const CohortConfig& cohort,
                                       std::int64_t round, std::uint64_t seed);

/// Local SGD on one client. Returns nullopt for an empty client.
std::optional<ParamTree> local_train(const ParamTree& global_params, const Batch& client,
                                     const ModelSpec& model, const LocalConfig& local,
                                     double fedprox_mu, std::int64_t round, std::size_t client_id,
                                     std::uint64_t seed);

/// Clip, then add noise.
ParamTree dp_process(const ParamTree& delta, const ClipSpec& clip, double sigma_client,
                     const NoiseMask& mask, std::uint64_t seed);

/// Unweighted mean, summed in the order given. Throws StructuralError on an empty list.
ParamTree aggregate(std::span<const ParamTree> deltas);

struct LayerStat {
  std::string name;
  double mean = 0.0;
  double std = 0.0;  ///< population std across the cohort
};

struct RoundMetrics {
  std::int64_t round = 0;
  std::vector<std::size_t> cohort;
  std::size_t participants = 0;  ///< cohort members with data
  bool skipped = false;
  double loss = 0.0;             ///< probe loss after the update
  double accuracy = 0.0;
  double lr = 0.0;
  double delta_norm_preclip_mean = 0.0;
  double clipped_fraction = 0.0;  ///< share of deltas whose norm exceeded C
  double pseudograd_norm_prenoise = 0.0;
  double pseudograd_norm_postnoise = 0.0;
  std::vector<LayerStat> per_layer;  ///< pre-clip delta norms, every model layer
  bool dp_valid = true;
};

/// Per-layer mean and population std of delta norms, in layer order.
std::vector<LayerStat> layer_stats(std::span<const ParamTree> deltas,
                                   const std::vector<std::string>& layer_names);

struct RunOptions {
  /// Threads used for the clients of one round.
  std::size_t workers = 1;
  /// Called after every round, in order.
  std::function<void(const RoundMetrics&)> on_round;
  /// Called with every pre-clip client delta, in ascending client order.
  std::function<void(std::int64_t round, std::size_t client_id, const ParamTree& delta)> on_client_delta;
};

struct SimulationResult {
  ParamTree final_params;
  std::vector<RoundMetrics> metrics;
  PrivacyReport privacy;
};

SimulationResult run_simulation(const FederationConfig& cfg, const ClientPartition& population,
                                const ModelSpec& model, const RunOptions& options = {});

}  // namespace fldp

#endif  // FLDP_FED_ENGINE_HPP_
