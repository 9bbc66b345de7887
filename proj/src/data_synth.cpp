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

#include "fldp/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fldp/errors.hpp"
#include "fldp/rng.hpp"

namespace fldp {

std::string_view to_string(CountKind kind) {
  switch (kind) {
    case CountKind::kUniform: return "uniform";
    case CountKind::kLogNormal: return "lognormal";
    case CountKind::kPower: return "power";
  }
  return "unknown";
}

CountKind parse_count_kind(std::string_view name) {
  if (name == "uniform") return CountKind::kUniform;
  if (name == "lognormal") return CountKind::kLogNormal;
  if (name == "power") return CountKind::kPower;
  throw ConfigError("population.examples_per_client.kind",
                    "unknown count distribution '" + std::string(name) + "'");
}

void PopulationSpec::validate() const {
  if (num_clients == 0) throw ConfigError("population.num_clients", "must be positive");
  if (num_classes < 2) throw ConfigError("population.num_classes", "must be at least 2");
  if (input_dim == 0) throw ConfigError("population.input_dim", "must be positive");
  if (!(label_skew_alpha > 0.0)) throw ConfigError("population.label_skew_alpha", "must be positive");
  if (!(noise_level >= 0.0)) throw ConfigError("population.noise_level", "must be >= 0");
  if (!(class_separation >= 0.0)) throw ConfigError("population.class_separation", "must be >= 0");
  if (!feature_scale.empty() && feature_scale.size() != input_dim)
    throw ConfigError("population.feature_scale", "must have input_dim entries");
  const auto& c = examples_per_client;
  const std::string base = "population.examples_per_client";
  if (c.kind == CountKind::kUniform && c.count == 0) throw ConfigError(base + ".count", "must be positive");
  if (c.kind == CountKind::kLogNormal && !(c.log_std >= 0.0))
    throw ConfigError(base + ".log_std", "must be >= 0");
  if (c.kind == CountKind::kPower && !(c.exponent > 0.0))
    throw ConfigError(base + ".exponent", "must be positive");
  if (c.kind == CountKind::kPower && c.min_count == 0)
    throw ConfigError(base + ".min_count", "must be positive");
}

std::size_t ClientPartition::total_examples() const noexcept {
  std::size_t n = 0;
  for (const auto& c : clients) n += c.size();
  return n;
}

namespace {

std::size_t draw_count(const CountDistribution& d, Rng& rng) {
  double raw = 1.0;
  switch (d.kind) {
    case CountKind::kUniform: raw = static_cast<double>(d.count); break;
    case CountKind::kLogNormal: raw = std::round(std::exp(d.log_mean + d.log_std * rng.normal())); break;
    case CountKind::kPower: {
      const double u = 1.0 - rng.uniform();
      raw = std::floor(static_cast<double>(d.min_count) * std::pow(u, -1.0 / d.exponent));
      break;
    }
  }
  if (d.max_count > 0) raw = std::min(raw, static_cast<double>(d.max_count));
  if (!(raw >= 1.0)) raw = 1.0;
  // Keep the cast well defined for extreme tails.
  raw = std::min(raw, 1e12);
  return static_cast<std::size_t>(raw);
}

std::vector<double> dirichlet(double alpha, std::size_t k, Rng& rng) {
  std::vector<double> p(k);
  // Limit alpha -> inf: every client gets the uniform label distribution.
  if (std::isinf(alpha)) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(k));
    return p;
  }
  double total = 0.0;
  for (auto& v : p) {
    v = rng.gamma(alpha);
    total += v;
  }
  if (!(total > 0.0)) {
    // All draws underflowed (tiny alpha): put the mass on one class.
    std::fill(p.begin(), p.end(), 0.0);
    p[rng.uniform_index(k)] = 1.0;
    return p;
  }
  for (auto& v : p) v /= total;
  return p;
}

int draw_label(const std::vector<double>& probs, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    cumulative += probs[c];
    if (u < cumulative) return static_cast<int>(c);
  }
  // Rounding left u above the final cumulative sum.
  for (std::size_t c = probs.size(); c-- > 0;)
    if (probs[c] > 0.0) return static_cast<int>(c);
  return 0;
}

void draw_example(const PopulationSpec& spec, const std::vector<std::vector<double>>& means, int label,
                  Rng& rng, std::vector<double>& x) {
  const auto& mean = means[static_cast<std::size_t>(label)];
  for (std::size_t k = 0; k < spec.input_dim; ++k) {
    double v = mean[k] + spec.noise_level * rng.normal();
    if (!spec.feature_scale.empty()) v *= spec.feature_scale[k];
    x[k] = v;
  }
}

}  // namespace

ClientPartition generate_population(const PopulationSpec& spec) {
  spec.validate();
  Rng means_rng(derive_seed(spec.seed, {tag(Stream::kPopulation), 0}));
  std::vector<std::vector<double>> means(spec.num_classes, std::vector<double>(spec.input_dim));
  for (auto& mean : means) {
    for (auto& v : mean) v = means_rng.normal();
    const double norm = std::sqrt(sum_squares(mean));
    for (auto& v : mean) v *= norm > 0.0 ? spec.class_separation / norm : 0.0;
  }

  ClientPartition out;
  out.num_classes = spec.num_classes;
  out.clients.resize(spec.num_clients);
  std::vector<double> x(spec.input_dim);
  for (std::size_t n = 0; n < spec.num_clients; ++n) {
    Rng rng(derive_seed(spec.seed, {tag(Stream::kPopulation), 1, n}));
    const std::size_t count = draw_count(spec.examples_per_client, rng);
    const auto probs = dirichlet(spec.label_skew_alpha, spec.num_classes, rng);
    Batch& client = out.clients[n];
    client.example_dim = spec.input_dim;
    client.features.reserve(count * spec.input_dim);
    client.labels.reserve(count);
    for (std::size_t e = 0; e < count; ++e) {
      const int label = draw_label(probs, rng);
      draw_example(spec, means, label, rng, x);
      client.push_back(x, label);
    }
  }

  Rng probe_rng(derive_seed(spec.seed, {tag(Stream::kProbe)}));
  out.probe.example_dim = spec.input_dim;
  for (std::size_t e = 0; e < spec.probe_size; ++e) {
    const int label = static_cast<int>(probe_rng.uniform_index(spec.num_classes));
    draw_example(spec, means, label, probe_rng, x);
    out.probe.push_back(x, label);
  }
  return out;
}

ClientPartition iid_shuffle(const ClientPartition& partition, std::uint64_t seed) {
  if (partition.clients.empty()) throw ConfigError("partition", "cannot shuffle an empty partition");
  ClientPartition out;
  out.num_classes = partition.num_classes;
  out.probe = partition.probe;
  const std::size_t n = partition.clients.size();
  const std::size_t dim = partition.clients.front().example_dim;
  out.clients.resize(n);
  for (auto& c : out.clients) c.example_dim = dim;
  Rng rng(derive_seed(seed, {tag(Stream::kIidShuffle)}));
  for (const auto& client : partition.clients)
    for (std::size_t e = 0; e < client.size(); ++e)
      out.clients[rng.uniform_index(n)].push_back(client.example(e), client.labels[e]);
  return out;
}

double mean_pairwise_label_tv(const ClientPartition& partition) {
  constexpr std::size_t kMaxTvClients = 1000;
  std::vector<std::vector<double>> dists;
  for (const auto& client : partition.clients) {
    if (client.empty()) continue;
    std::vector<double> h(partition.num_classes, 0.0);
    for (int label : client.labels) h[static_cast<std::size_t>(label)] += 1.0;
    for (auto& v : h) v /= static_cast<double>(client.size());
    dists.push_back(std::move(h));
  }
  if (dists.size() < 2) return 0.0;
  if (dists.size() > kMaxTvClients) {
    // Evenly spaced subsample keeps the pairwise pass bounded.
    std::vector<std::vector<double>> kept;
    const double stride = static_cast<double>(dists.size()) / kMaxTvClients;
    for (std::size_t i = 0; i < kMaxTvClients; ++i)
      kept.push_back(std::move(dists[static_cast<std::size_t>(i * stride)]));
    dists = std::move(kept);
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < dists.size(); ++a)
    for (std::size_t b = a + 1; b < dists.size(); ++b) {
      double tv = 0.0;
      for (std::size_t c = 0; c < partition.num_classes; ++c) tv += std::abs(dists[a][c] - dists[b][c]);
      total += 0.5 * tv;
      ++pairs;
    }
  return total / static_cast<double>(pairs);
}

PartitionStats partition_stats(const ClientPartition& partition) {
  if (partition.clients.empty()) throw ConfigError("partition", "partition has no clients");
  PartitionStats s;
  s.num_clients = partition.clients.size();
  s.class_histogram.assign(partition.num_classes, 0);
  s.min = partition.clients.front().size();
  double sum = 0.0;
  for (const auto& client : partition.clients) {
    const std::size_t k = client.size();
    s.total_examples += k;
    s.min = std::min(s.min, k);
    s.max = std::max(s.max, k);
    sum += static_cast<double>(k);
    for (int label : client.labels) ++s.class_histogram.at(static_cast<std::size_t>(label));
  }
  const double n = static_cast<double>(s.num_clients);
  s.mean = sum / n;
  double sq = 0.0;
  for (const auto& client : partition.clients) {
    const double d = static_cast<double>(client.size()) - s.mean;
    sq += d * d;
  }
  s.std = std::sqrt(sq / n);
  s.mean_pairwise_label_tv = mean_pairwise_label_tv(partition);
  return s;
}

}  // namespace fldp
