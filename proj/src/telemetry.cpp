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

#include "fldp/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "fldp/errors.hpp"
#include "fldp/rng.hpp"

namespace fldp {

nlohmann::ordered_json to_json(const RoundMetrics& m) {
  nlohmann::ordered_json per_layer = nlohmann::ordered_json::object();
  for (const auto& s : m.per_layer) per_layer[s.name] = {{"mean", s.mean}, {"std", s.std}};
  return {{"t", m.round},
          {"loss", m.loss},
          {"accuracy", m.accuracy},
          {"lr", m.lr},
          {"delta_norm_preclip_mean", m.delta_norm_preclip_mean},
          {"pseudograd_norm_prenoise", m.pseudograd_norm_prenoise},
          {"pseudograd_norm_postnoise", m.pseudograd_norm_postnoise},
          {"per_layer", per_layer},
          {"participants", m.participants},
          {"cohort_size", m.cohort.size()},
          {"clipped_fraction", m.clipped_fraction},
          {"skipped", m.skipped},
          {"dp_valid", m.dp_valid},
          {"cohort", m.cohort}};
}

void emit_round(const RoundMetrics& m, std::ostream& sink) {
  sink << to_json(m).dump() << '\n';
  sink.flush();
  if (!sink) throw IoError("failed to write metrics for round " + std::to_string(m.round));
}

MetricsSink::MetricsSink(const std::filesystem::path& path) : path_(path), out_(path, std::ios::trunc) {
  if (!out_) throw IoError("cannot open metrics file '" + path.string() + "'");
}

void MetricsSink::emit(const RoundMetrics& m) {
  try {
    emit_round(m, out_);
  } catch (const IoError&) {
    throw IoError("failed to write '" + path_.string() + "' at round " + std::to_string(m.round));
  }
}

nlohmann::ordered_json to_json(const PrivacyReport& r) {
  return {{"epsilon", number_json(r.epsilon)},
          {"delta", r.delta},
          {"best_order", r.best_order},
          {"noise_multiplier", r.noise_multiplier},
          {"sensitivity", r.sensitivity},
          {"sigma_client", r.sigma_client},
          {"sigma_avg", r.sigma_avg},
          {"sigma_sum", r.sigma_sum},
          {"sampling_rate", r.sampling_rate},
          {"steps", r.steps},
          {"conversion", to_string(r.conversion)},
          {"dp_valid", r.dp_valid},
          {"accounting",
           "Poisson subsampling with rate q is assumed, including for fixed-size cohorts (q = L/N)"}};
}

nlohmann::ordered_json run_manifest(const SimulationConfig& config, const PrivacyReport& privacy) {
  return {{"engine_version", kEngineVersion},
          {"rng_algorithm", kRngAlgorithm},
          {"seed", config.federation.seed},
          {"dp_valid", privacy.dp_valid},
          {"privacy", to_json(privacy)},
          {"config", to_json(config)}};
}

namespace {

struct LayerAccumulator {
  std::vector<double> round_means;
  double weighted_sum = 0.0;     // sum n_r * mean_r
  double weighted_sq_sum = 0.0;  // sum n_r * (std_r^2 + mean_r^2)
  double count = 0.0;
};

double get_number(const nlohmann::ordered_json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw StructuralError("metrics line " + std::to_string(line) + ": missing numeric field '" + key + "'");
  return j.at(key).get<double>();
}

}  // namespace

Summary summarize(std::istream& in) {
  Summary s;
  s.best_loss = std::numeric_limits<double>::infinity();
  std::vector<std::string> order;
  std::map<std::string, LayerAccumulator> layers;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw StructuralError("metrics line " + std::to_string(line) + ": " + e.what());
    }
    if (!j.is_object()) throw StructuralError("metrics line " + std::to_string(line) + ": not an object");
    const double loss = get_number(j, "loss", line);
    const double acc = get_number(j, "accuracy", line);
    const auto t = static_cast<std::int64_t>(get_number(j, "t", line));
    const double participants = get_number(j, "participants", line);
    if (!j.contains("per_layer") || !j.at("per_layer").is_object())
      throw StructuralError("metrics line " + std::to_string(line) + ": missing 'per_layer'");
    ++s.rounds;
    s.final_loss = loss;
    s.final_accuracy = acc;
    if (loss < s.best_loss) {
      s.best_loss = loss;
      s.best_round = t;
    }
    if (participants <= 0.0) continue;
    for (const auto& item : j.at("per_layer").items()) {
      const double mean = get_number(item.value(), "mean", line);
      const double std = get_number(item.value(), "std", line);
      auto [it, inserted] = layers.try_emplace(item.key());
      if (inserted) order.push_back(item.key());
      auto& acc_layer = it->second;
      acc_layer.round_means.push_back(mean);
      acc_layer.weighted_sum += participants * mean;
      acc_layer.weighted_sq_sum += participants * (std * std + mean * mean);
      acc_layer.count += participants;
    }
  }
  if (s.rounds == 0) throw StructuralError("metrics file has no rounds");
  for (const auto& name : order) {
    const auto& a = layers.at(name);
    LayerSummary ls;
    ls.name = name;
    const double k = static_cast<double>(a.round_means.size());
    for (double v : a.round_means) ls.mean += v;
    ls.mean /= k;
    double var = 0.0;
    for (double v : a.round_means) var += (v - ls.mean) * (v - ls.mean);
    ls.std_across_rounds = std::sqrt(var / k);
    ls.pooled_mean = a.weighted_sum / a.count;
    ls.pooled_std = std::sqrt(std::max(0.0, a.weighted_sq_sum / a.count - ls.pooled_mean * ls.pooled_mean));
    s.per_layer.push_back(std::move(ls));
  }
  return s;
}

Summary summarize_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics file '" + path.string() + "'");
  return summarize(in);
}

nlohmann::ordered_json to_json(const Summary& s) {
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const auto& l : s.per_layer)
    layers.push_back({{"name", l.name},
                      {"mean", l.mean},
                      {"std_across_rounds", l.std_across_rounds},
                      {"pooled_mean", l.pooled_mean},
                      {"pooled_std", l.pooled_std}});
  return {{"rounds", s.rounds},
          {"final_loss", s.final_loss},
          {"final_accuracy", s.final_accuracy},
          {"best_loss", s.best_loss},
          {"best_round", s.best_round},
          {"per_layer", layers}};
}

std::string to_csv(const Summary& s) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "layer,mean,std_across_rounds,pooled_mean,pooled_std\n";
  for (const auto& l : s.per_layer)
    out << l.name << ',' << l.mean << ',' << l.std_across_rounds << ',' << l.pooled_mean << ','
        << l.pooled_std << '\n';
  return out.str();
}

ClientPartition build_population(const SimulationConfig& config) {
  ClientPartition p = generate_population(config.population);
  if (config.iid_shuffle) p = iid_shuffle(p, derive_seed(config.population.seed, {tag(Stream::kIidShuffle)}));
  return p;
}

namespace {

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << '\n';
  out.flush();
  if (!out) throw IoError("failed to write '" + path.string() + "'");
}

}  // namespace

SimulationResult simulate_to_directory(const SimulationConfig& config,
                                       const std::filesystem::path& out_dir, std::size_t workers) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
  const ClientPartition population = build_population(config);
  config.federation.validate(population.num_clients());
  // The manifest goes first so an aborted run still records what it was.
  const auto expected_privacy =
      privacy_report(config.federation.privacy, config.federation.orders, config.federation.conversion,
                     config.federation.noise_mask.covers(init_params(config.model, 0)));
  write_json(out_dir / "run_manifest.json", run_manifest(config, expected_privacy));

  MetricsSink sink(out_dir / "metrics.jsonl");
  RunOptions options;
  options.workers = workers;
  options.on_round = [&](const RoundMetrics& m) { sink.emit(m); };
  SimulationResult result = run_simulation(config.federation, population, config.model, options);

  write_json(out_dir / "run_manifest.json", run_manifest(config, result.privacy));
  write_json(out_dir / "privacy_report.json", to_json(result.privacy));
  nlohmann::ordered_json params = to_json(result.final_params);
  write_json(out_dir / "final_params.json", params);
  return result;
}

std::string format_partition_table(const PartitionStats& s) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "# clients | # examples | examples per client: mean |    std |  min |    max\n";
  out << std::setw(9) << s.num_clients << " | " << std::setw(10) << s.total_examples << " | "
      << std::setw(25) << s.mean << " | " << std::setw(6) << s.std << " | " << std::setw(4) << s.min
      << " | " << std::setw(6) << s.max << '\n';
  out << "class histogram:";
  for (std::size_t c = 0; c < s.class_histogram.size(); ++c) out << ' ' << c << ':' << s.class_histogram[c];
  out << "\nmean pairwise label TV: " << std::setprecision(4) << s.mean_pairwise_label_tv << '\n';
  return out.str();
}

nlohmann::ordered_json to_json(const PartitionStats& s) {
  return {{"num_clients", s.num_clients},
          {"total_examples", s.total_examples},
          {"mean", s.mean},
          {"std", s.std},
          {"min", s.min},
          {"max", s.max},
          {"class_histogram", s.class_histogram},
          {"mean_pairwise_label_tv", s.mean_pairwise_label_tv}};
}

}  // namespace fldp
