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

#ifndef FLDP_DATA_SYNTH_HPP_
#define FLDP_DATA_SYNTH_HPP_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "fldp/models.hpp"

namespace fldp {

enum class CountKind { kUniform, kLogNormal, kPower };

std::string_view to_string(CountKind kind);
CountKind parse_count_kind(std::string_view name);

/**
 * Distribution of examples per client.
 *
 * Uniform    every client gets exactly `count`
 * LogNormal  round(exp(log_mean + log_std * N(0,1)))
 * Power      floor(min_count * U^(-1/exponent)) (Pareto tail)
 *
 * Draws are clamped to [1, max_count] (max_count == 0 means no upper cap).
 */
struct CountDistribution {
  CountKind kind = CountKind::kUniform;
  std::size_t count = 10;
  double log_mean = 2.0;
  double log_std = 1.0;
  double exponent = 1.0;
  std::size_t min_count = 1;
  std::size_t max_count = 0;

  bool operator==(const CountDistribution&) const = default;
};

struct PopulationSpec {
  std::size_t num_clients = 10;
  CountDistribution examples_per_client;
  /// Dirichlet concentration of each client's label distribution.
  double label_skew_alpha = 1.0;
  std::size_t num_classes = 2;
  /// Features per example.
  std::size_t input_dim = 2;
  /// Std of the within-class Gaussian noise.
  double noise_level = 1.0;
  /// Norm of each class mean.
  double class_separation = 1.0;
  /// Per-feature multipliers applied after sampling; empty means all ones.
  std::vector<double> feature_scale;
  std::size_t probe_size = 256;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const PopulationSpec&) const = default;
};

struct ClientPartition {
  std::vector<Batch> clients;  ///< client n is clients[n]
  Batch probe;
  std::size_t num_classes = 0;

  std::size_t num_clients() const noexcept { return clients.size(); }
  std::size_t total_examples() const noexcept;
};

/// Class-conditional Gaussian data with Dirichlet label skew. Pure in spec.
ClientPartition generate_population(const PopulationSpec& spec);

/// Reassigns every example to a uniformly random client, keeping the multiset
/// of examples and the number of clients. Clients may end up empty.
ClientPartition iid_shuffle(const ClientPartition& partition, std::uint64_t seed);

struct PartitionStats {
  std::size_t num_clients = 0;
  std::size_t total_examples = 0;
  double mean = 0.0;
  double std = 0.0;  ///< population std (divide by n)
  std::size_t min = 0;
  std::size_t max = 0;
  std::vector<std::size_t> class_histogram;
  /// Mean pairwise total-variation distance between non-empty clients' label distributions.
  double mean_pairwise_label_tv = 0.0;
};

PartitionStats partition_stats(const ClientPartition& partition);

/// Mean pairwise total-variation distance between label histograms of non-empty
/// clients. Above 1000 such clients an evenly spaced subsample of 1000 is used.
double mean_pairwise_label_tv(const ClientPartition& partition);

}  // namespace fldp

#endif  // FLDP_DATA_SYNTH_HPP_
