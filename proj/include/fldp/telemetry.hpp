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

#ifndef FLDP_TELEMETRY_HPP_
#define FLDP_TELEMETRY_HPP_

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fldp/accountant.hpp"
#include "fldp/config.hpp"
#include "fldp/data_synth.hpp"
#include "fldp/fed_engine.hpp"

namespace fldp {

inline constexpr std::string_view kEngineVersion = "fldp 1.0.0";

/// One metrics.jsonl record:
/// {t, loss, accuracy, lr, delta_norm_preclip_mean, pseudograd_norm_prenoise,
///  pseudograd_norm_postnoise, per_layer: {name: {mean, std}}, ...}
nlohmann::ordered_json to_json(const RoundMetrics& m);

/// Writes one JSON line and flushes. Throws IoError when the stream fails.
void emit_round(const RoundMetrics& m, std::ostream& sink);

/// Append-only JSONL file of round metrics.
class MetricsSink {
 public:
  explicit MetricsSink(const std::filesystem::path& path);
  void emit(const RoundMetrics& m);

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

nlohmann::ordered_json to_json(const PrivacyReport& r);

/// Everything needed to reproduce a run: resolved config, engine version,
/// RNG algorithm, seed and derived privacy quantities.
nlohmann::ordered_json run_manifest(const SimulationConfig& config, const PrivacyReport& privacy);

struct LayerSummary {
  std::string name;
  double mean = 0.0;               ///< mean over rounds of the per-round mean
  double std_across_rounds = 0.0;  ///< population std of the per-round means
  double pooled_mean = 0.0;        ///< mean over every client delta in the run
  double pooled_std = 0.0;         ///< std over every client delta in the run
};

struct Summary {
  std::size_t rounds = 0;
  double final_loss = 0.0;
  double final_accuracy = 0.0;
  double best_loss = 0.0;
  std::int64_t best_round = 0;
  std::vector<LayerSummary> per_layer;
};

/// Aggregates metrics.jsonl content. Rounds without participants do not
/// contribute to per-layer statistics. Malformed lines raise StructuralError
/// naming the line number.
Summary summarize(std::istream& metrics);
Summary summarize_file(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const Summary& s);
/// layer,mean,std_across_rounds,pooled_mean,pooled_std
std::string to_csv(const Summary& s);

/// Population described by the config, IID-shuffled when requested.
ClientPartition build_population(const SimulationConfig& config);

/// Runs the config and writes metrics.jsonl (one line per round, flushed as
/// it is produced), privacy_report.json, final_params.json and
/// run_manifest.json into out_dir, creating it if needed.
SimulationResult simulate_to_directory(const SimulationConfig& config,
                                       const std::filesystem::path& out_dir, std::size_t workers);

/// Table-style text rendering of partition statistics.
std::string format_partition_table(const PartitionStats& s);
nlohmann::ordered_json to_json(const PartitionStats& s);

}  // namespace fldp

#endif  // FLDP_TELEMETRY_HPP_
