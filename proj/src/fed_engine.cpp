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

#include "fldp/fed_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <string>
#include <thread>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "fldp/errors.hpp"
#include "fldp/rng.hpp"

namespace fldp {

std::string_view to_string(CohortMode mode) {
  return mode == CohortMode::kFixedSize ? "fixed_size" : "bernoulli";
}

CohortMode parse_cohort_mode(std::string_view name) {
  if (name == "fixed_size") return CohortMode::kFixedSize;
  if (name == "bernoulli") return CohortMode::kBernoulli;
  throw ConfigError("federation.cohort.mode", "unknown cohort mode '" + std::string(name) + "'");
}

std::string_view to_string(LocalMode mode) { return mode == LocalMode::kEpochs ? "epochs" : "steps"; }

LocalMode parse_local_mode(std::string_view name) {
  if (name == "epochs") return LocalMode::kEpochs;
  if (name == "steps") return LocalMode::kSteps;
  throw ConfigError("federation.local.mode", "unknown local mode '" + std::string(name) + "'");
}

namespace {

bool nearly_equal(double a, double b) {
  if (a == b) return true;
  return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

}  // namespace

void FederationConfig::validate(std::size_t population_size) const {
  const double n = static_cast<double>(population_size);
  if (rounds < 0) throw ConfigError("federation.rounds", "must be >= 0");
  if (cohort.mode == CohortMode::kFixedSize) {
    if (cohort.size < 1 || cohort.size > population_size)
      throw ConfigError("federation.cohort.size", "must satisfy 1 <= L <= N (N = " +
                                                      std::to_string(population_size) + ")");
  } else if (!(cohort.rate > 0.0 && cohort.rate <= 1.0)) {
    throw ConfigError("federation.cohort.rate", "must be in (0, 1]");
  }
  if (local.count == 0) throw ConfigError("federation.local.count", "must be positive");
  if (local.batch_size == 0) throw ConfigError("federation.local.batch_size", "must be positive");
  if (!(local.lr >= 0.0) || !std::isfinite(local.lr)) throw ConfigError("federation.local.lr", "must be finite and >= 0");
  if (!(local.clip > 0.0)) throw ConfigError("federation.local.clip", "must be positive");
  if (!(fedprox_mu >= 0.0) || !std::isfinite(fedprox_mu))
    throw ConfigError("federation.fedprox_mu", "must be finite and >= 0");
  if (!(clip.bound >= 0.0)) throw ConfigError("clip.bound", "must be >= 0");
  central.schedule.validate();

  if (!(privacy.sigma >= 0.0) || !std::isfinite(privacy.sigma))
    throw ConfigError("privacy.sigma", "must be finite and >= 0");
  if (!(privacy.delta > 0.0 && privacy.delta < 1.0)) throw ConfigError("privacy.delta", "must be in (0, 1)");
  if (!(privacy.clip_bound == clip.bound))
    throw ConfigError("privacy.clip_bound", "privacy.clip_bound (" + std::to_string(privacy.clip_bound) +
                                                ") must equal clip.bound (" + std::to_string(clip.bound) + ")");
  if (privacy.population != population_size)
    throw ConfigError("privacy.population", "privacy.population (" + std::to_string(privacy.population) +
                                                ") must equal the population size (" +
                                                std::to_string(population_size) + ")");
  if (privacy.steps != rounds)
    throw ConfigError("privacy.steps", "privacy.steps must equal federation.rounds");
  if (cohort.mode == CohortMode::kFixedSize) {
    const double l = static_cast<double>(cohort.size);
    if (!nearly_equal(privacy.cohort_size, l))
      throw ConfigError("privacy.cohort_size", "must equal federation.cohort.size for fixed-size cohorts");
    if (!nearly_equal(privacy.sampling_rate, l / n))
      throw ConfigError("privacy.sampling_rate", "must equal federation.cohort.size / N for fixed-size cohorts");
  } else {
    if (!nearly_equal(privacy.sampling_rate, cohort.rate))
      throw ConfigError("privacy.sampling_rate", "must equal federation.cohort.rate");
    if (!nearly_equal(privacy.cohort_size, cohort.rate * n))
      throw ConfigError("privacy.cohort_size", "must equal federation.cohort.rate * N");
  }
  if (privacy.sigma > 0.0 && privacy.expected_cohort() < 1.0)
    throw ConfigError("privacy.cohort_size", "expected cohort size must be >= 1 to convert sigma");
  if (orders.empty()) throw ConfigError("accountant.orders", "order grid is empty");
  for (double a : orders)
    if (!(a > 1.0)) throw ConfigError("accountant.orders", "every order must be > 1");
}

std::vector<std::size_t> sample_cohort(std::size_t population_size, const CohortConfig& cohort,
                                       std::int64_t round, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {tag(Stream::kCohort), static_cast<std::uint64_t>(round)}));
  std::vector<std::size_t> ids;
  if (cohort.mode == CohortMode::kFixedSize) {
    if (cohort.size > population_size)
      throw ConfigError("federation.cohort.size", "cohort size exceeds population size");
    // Floyd's algorithm: L distinct ids, uniform over subsets.
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(cohort.size * 2);
    for (std::size_t j = population_size - cohort.size; j < population_size; ++j) {
      const auto t = static_cast<std::size_t>(rng.uniform_index(j + 1));
      if (!chosen.insert(t).second) chosen.insert(j);
    }
    ids.assign(chosen.begin(), chosen.end());
    std::sort(ids.begin(), ids.end());
  } else {
    if (!(cohort.rate >= 0.0 && cohort.rate <= 1.0))
      throw ConfigError("federation.cohort.rate", "must be in [0, 1]");
    for (std::size_t id = 0; id < population_size; ++id)
      if (rng.uniform() < cohort.rate) ids.push_back(id);
  }
  return ids;
}

std::optional<ParamTree> local_train(const ParamTree& global_params, const Batch& client,
                                     const ModelSpec& model, const LocalConfig& local,
                                     double fedprox_mu, std::int64_t round, std::size_t client_id,
                                     std::uint64_t seed) {
  if (client.empty()) return std::nullopt;
  Rng rng(derive_seed(seed, {tag(Stream::kLocalShuffle), static_cast<std::uint64_t>(round), client_id}));
  const std::size_t n = client.size();
  const std::size_t batch_size = std::min(local.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  ParamTree theta = global_params;
  auto step = [&](std::span<const std::size_t> indices) {
    ParamTree g = grad(model, theta, select(client, indices));
    if (fedprox_mu > 0.0) g = axpy(fedprox_mu, subtract(theta, global_params), g);
    g = clip_global(g, local.clip);
    theta = axpy(-local.lr, g, theta);
  };

  const std::span<const std::size_t> all(order);
  if (local.mode == LocalMode::kEpochs) {
    for (std::size_t epoch = 0; epoch < local.count; ++epoch) {
      rng.shuffle(std::span<std::size_t>(order));
      for (std::size_t start = 0; start < n; start += batch_size)
        step(all.subspan(start, std::min(batch_size, n - start)));
    }
  } else {
    std::size_t position = n;  // forces a shuffle before the first step
    for (std::size_t s = 0; s < local.count; ++s) {
      if (position + batch_size > n) {
        rng.shuffle(std::span<std::size_t>(order));
        position = 0;
      }
      step(all.subspan(position, batch_size));
      position += batch_size;
    }
  }
  return subtract(theta, global_params);
}

ParamTree dp_process(const ParamTree& delta, const ClipSpec& clip_spec, double sigma_client,
                     const NoiseMask& mask, std::uint64_t seed) {
  return add_noise(clip(delta, clip_spec), sigma_client, mask, seed);
}

ParamTree aggregate(std::span<const ParamTree> deltas) {
  if (deltas.empty()) throw StructuralError("cannot aggregate an empty cohort");
  ParamTree sum = deltas.front();
  for (std::size_t i = 1; i < deltas.size(); ++i) sum = add(sum, deltas[i]);
  if (deltas.size() == 1) return sum;
  return scaled(sum, 1.0 / static_cast<double>(deltas.size()));
}

std::vector<LayerStat> layer_stats(std::span<const ParamTree> deltas,
                                   const std::vector<std::string>& layer_names) {
  std::vector<LayerStat> stats;
  stats.reserve(layer_names.size());
  for (const auto& name : layer_names) stats.push_back({name, 0.0, 0.0});
  if (deltas.empty()) return stats;
  const double count = static_cast<double>(deltas.size());
  for (std::size_t i = 0; i < layer_names.size(); ++i) {
    std::vector<double> norms;
    norms.reserve(deltas.size());
    for (const auto& d : deltas) norms.push_back(std::sqrt(sum_squares(d.values(i))));
    double mean = 0.0;
    for (double v : norms) mean += v;
    mean /= count;
    double var = 0.0;
    for (double v : norms) var += (v - mean) * (v - mean);
    stats[i].mean = mean;
    stats[i].std = std::sqrt(var / count);
  }
  return stats;
}

namespace {

struct ClientOutcome {
  std::optional<ParamTree> preclip;
  ParamTree clipped;
  ParamTree noised;
  double preclip_norm = 0.0;
};

ClientOutcome run_client(const FederationConfig& cfg, const ParamTree& theta, const Batch& data,
                         const ModelSpec& model, double sigma_client, std::int64_t round,
                         std::size_t client_id) {
  ClientOutcome out;
  out.preclip = local_train(theta, data, model, cfg.local, cfg.fedprox_mu, round, client_id, cfg.seed);
  if (!out.preclip) return out;
  out.preclip_norm = global_norm(*out.preclip);
  out.clipped = clip(*out.preclip, cfg.clip);
  const double clipped_norm = global_norm(out.clipped);
  if (clipped_norm > cfg.clip.bound * (1.0 + 1e-12))
    throw NumericalError("clipped delta norm " + std::to_string(clipped_norm) + " exceeds bound " +
                         std::to_string(cfg.clip.bound));
  const std::uint64_t noise_seed =
      derive_seed(cfg.seed, {tag(Stream::kNoise), static_cast<std::uint64_t>(round), client_id});
  out.noised = add_noise(out.clipped, sigma_client, cfg.noise_mask, noise_seed);
  return out;
}

std::vector<ClientOutcome> run_cohort(const FederationConfig& cfg, const ParamTree& theta,
                                      const ClientPartition& population, const ModelSpec& model,
                                      double sigma_client, std::int64_t round,
                                      const std::vector<std::size_t>& cohort, std::size_t workers) {
  std::vector<ClientOutcome> outcomes(cohort.size());
  auto work = [&](std::size_t slot) {
    const std::size_t id = cohort[slot];
    outcomes[slot] = run_client(cfg, theta, population.clients[id], model, sigma_client, round, id);
  };
  const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), cohort.size());
  if (threads <= 1) {
    for (std::size_t slot = 0; slot < cohort.size(); ++slot) work(slot);
    return outcomes;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t slot = next++; slot < cohort.size(); slot = next++) work(slot);
        } catch (...) {
          errors[w] = std::current_exception();
          next = cohort.size();
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return outcomes;
}

}  // namespace

SimulationResult run_simulation(const FederationConfig& cfg, const ClientPartition& population,
                                const ModelSpec& model, const RunOptions& options) {
  model.validate();
  cfg.validate(population.num_clients());
  for (const auto& client : population.clients)
    if (!client.empty() && client.example_dim != model.example_dim())
      throw ConfigError("model", "population example_dim does not match the model");

  ParamTree theta = cfg.seed_model ? *cfg.seed_model
                                   : init_params(model, derive_seed(cfg.seed, {tag(Stream::kInit)}));
  {
    const ParamTree reference = init_params(model, 0);
    reference.require_congruent(theta, "seed_model");
  }
  cfg.noise_mask.validate(theta);
  const bool dp_valid = cfg.noise_mask.covers(theta);
  if (!dp_valid) spdlog::warn("partial noise mask: results are NOT differentially private");
  const double sigma_client = cfg.privacy.sigma == 0.0 ? 0.0 : cfg.privacy.sigma_as(NoiseKind::kClient);
  const auto names = theta.names();

  OptimizerState central = make_optimizer_state(cfg.central.optimizer, cfg.central.hyper, theta);
  SimulationResult result;
  result.metrics.reserve(static_cast<std::size_t>(cfg.rounds));

  for (std::int64_t t = 1; t <= cfg.rounds; ++t) {
    RoundMetrics m;
    m.round = t;
    m.dp_valid = dp_valid;
    m.cohort = sample_cohort(population.num_clients(), cfg.cohort, t, cfg.seed);
    m.lr = lr_at(cfg.central.schedule, t - 1);

    auto outcomes = run_cohort(cfg, theta, population, model, sigma_client, t, m.cohort, options.workers);
    std::vector<ParamTree> preclip, clipped, noised;
    std::size_t clipped_count = 0;
    double norm_sum = 0.0;
    for (std::size_t slot = 0; slot < outcomes.size(); ++slot) {
      auto& o = outcomes[slot];
      if (!o.preclip) {
        spdlog::debug("round {}: client {} has no data, dropped", t, m.cohort[slot]);
        continue;
      }
      if (options.on_client_delta) options.on_client_delta(t, m.cohort[slot], *o.preclip);
      norm_sum += o.preclip_norm;
      if (o.preclip_norm > cfg.clip.bound) ++clipped_count;
      preclip.push_back(std::move(*o.preclip));
      clipped.push_back(std::move(o.clipped));
      noised.push_back(std::move(o.noised));
    }
    m.participants = preclip.size();
    m.per_layer = layer_stats(preclip, names);

    if (preclip.empty()) {
      // The round still counts against the privacy budget.
      spdlog::warn("round {}: empty cohort, central step skipped", t);
      m.skipped = true;
    } else {
      const double count = static_cast<double>(preclip.size());
      m.delta_norm_preclip_mean = norm_sum / count;
      m.clipped_fraction = static_cast<double>(clipped_count) / count;
      const ParamTree mean_clipped = aggregate(clipped);
      const ParamTree mean_noised = aggregate(noised);
      m.pseudograd_norm_prenoise = global_norm(mean_clipped);
      m.pseudograd_norm_postnoise = global_norm(mean_noised);
      auto step = apply(central, theta, scaled(mean_noised, -1.0), m.lr);
      theta = std::move(step.params);
      central = std::move(step.state);
    }

    if (!population.probe.empty()) {
      m.loss = loss(model, theta, population.probe);
      m.accuracy = accuracy(model, theta, population.probe);
      if (!std::isfinite(m.loss))
        throw NumericalError("non-finite probe loss at round " + std::to_string(t));
    }
    if (options.on_round) options.on_round(m);
    result.metrics.push_back(std::move(m));
  }

  result.final_params = std::move(theta);
  result.privacy = privacy_report(cfg.privacy, cfg.orders, cfg.conversion, dp_valid);
  return result;
}

}  // namespace fldp
