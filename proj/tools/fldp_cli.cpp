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

// fldp command-line interface.
//
//   fldp simulate         --config FILE --out DIR [--workers N]
//   fldp accountant       (--z Z | --sigma S --clip C --population N) --q Q --steps T ...
//   fldp convert-noise    --sigma S --from KIND --to KIND --cohort-size L
//   fldp partition-stats  --config FILE [--json]
//   fldp summarize        --metrics FILE [--format csv|json] [--out FILE]
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 3 numerical
// failure, 4 file or stream failure. FLDP_LOG_LEVEL sets log verbosity
// (trace, debug, info, warn, error, critical, off).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "fldp/accountant.hpp"
#include "fldp/config.hpp"
#include "fldp/data_synth.hpp"
#include "fldp/dp_mechanism.hpp"
#include "fldp/errors.hpp"
#include "fldp/telemetry.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

void configure_logging() {
  spdlog::set_default_logger(spdlog::stderr_logger_mt("fldp"));
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("FLDP_LOG_LEVEL")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only honour names it really knows.
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
    else spdlog::warn("ignoring unknown FLDP_LOG_LEVEL '{}'", env);
  }
}

// Accepts either a config file or a run_manifest.json written by simulate.
fldp::SimulationConfig load_any_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw fldp::IoError("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw fldp::ConfigError("config", path.string() + ": " + e.what());
  }
  if (j.is_object() && j.contains("engine_version") && j.contains("config")) {
    spdlog::info("reading config snapshot from manifest written by {}", j.at("engine_version").get<std::string>());
    return fldp::parse_config(j.at("config"), path.parent_path());
  }
  return fldp::parse_config(j, path.parent_path());
}

void write_text(const std::optional<fs::path>& out, const std::string& text) {
  if (!out) {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw fldp::IoError("failed to write to stdout");
    return;
  }
  std::ofstream f(*out, std::ios::trunc);
  f << text;
  f.flush();
  if (!f) throw fldp::IoError("failed to write '" + out->string() + "'");
}

std::vector<double> parse_orders(const std::string& text) {
  if (text.empty()) return fldp::default_orders();
  std::vector<double> orders;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    try {
      std::size_t used = 0;
      orders.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw fldp::ConfigError("orders", "not a number: '" + item + "'");
    }
  }
  return orders;
}

// simulate --------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string out;
  std::size_t workers = 1;
};

int run_simulate(const SimulateArgs& a) {
  const auto config = load_any_config(a.config);
  spdlog::info("simulating {} rounds on {} clients with {} worker(s)", config.federation.rounds,
               config.population.num_clients, a.workers);
  const auto result = fldp::simulate_to_directory(config, a.out, a.workers);
  if (!result.metrics.empty()) {
    const auto& last = result.metrics.back();
    spdlog::info("final probe loss {:.6g}, accuracy {:.4f}", last.loss, last.accuracy);
  }
  spdlog::info("epsilon {} at delta {:g}{}", result.privacy.epsilon, result.privacy.delta,
               result.privacy.dp_valid ? "" : " (not differentially private: partial noise mask)");
  return 0;
}

// accountant ------------------------------------------------------------------

struct AccountantArgs {
  std::optional<double> z;
  std::optional<double> sigma;
  std::string sigma_kind = "avg";
  std::optional<double> clip;
  std::optional<std::uint64_t> population;
  std::optional<double> cohort_size;
  double q = 0.0;
  std::int64_t steps = 0;
  double delta = 1e-9;
  std::string orders;
  std::string conversion = "improved";
  std::optional<double> target_epsilon;
  bool curve = false;
};

int run_accountant(const AccountantArgs& a) {
  const auto orders = parse_orders(a.orders);
  const auto conversion = fldp::parse_conversion(a.conversion);
  ordered_json out;
  if (a.target_epsilon) {
    const double z = fldp::calibrate_noise(*a.target_epsilon, a.q, a.steps, a.delta, 1e-3, orders, {}, conversion);
    const auto e = fldp::compute_epsilon(z, a.q, a.steps, a.delta, orders, conversion);
    out["noise_multiplier"] = z;
    out["sampling_rate"] = a.q;
    out["steps"] = a.steps;
    out["delta"] = a.delta;
    out["epsilon"] = fldp::number_json(e.epsilon);
    out["best_order"] = e.best_order;
    out["conversion"] = fldp::to_string(conversion);
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  double z = 0.0;
  if (a.z) {
    if (a.sigma) throw fldp::ConfigError("z", "give either --z or --sigma, not both");
    z = *a.z;
  } else {
    if (!a.sigma || !a.clip || !a.population)
      throw fldp::ConfigError("sigma", "without --z, --sigma, --clip and --population are required");
    fldp::PrivacyParams p;
    p.sigma = *a.sigma;
    p.sigma_kind = fldp::parse_noise_kind(a.sigma_kind);
    p.clip_bound = *a.clip;
    p.sampling_rate = a.q;
    p.population = *a.population;
    p.cohort_size = a.cohort_size.value_or(0.0);
    p.steps = a.steps;
    p.delta = a.delta;
    z = fldp::noise_multiplier(p);
    out["chain"] = {{"sigma_client", p.sigma_as(fldp::NoiseKind::kClient)},
                    {"sigma_avg", p.sigma_as(fldp::NoiseKind::kAvg)},
                    {"sigma_sum", p.sigma_as(fldp::NoiseKind::kSum)},
                    {"cohort_size", p.expected_cohort()},
                    {"sensitivity", p.sensitivity()},
                    {"noise_multiplier", z}};
  }
  const auto e = fldp::compute_epsilon(z, a.q, a.steps, a.delta, orders, conversion);
  out["noise_multiplier"] = z;
  out["sampling_rate"] = a.q;
  out["steps"] = a.steps;
  out["delta"] = a.delta;
  out["epsilon"] = fldp::number_json(e.epsilon);
  out["best_order"] = e.best_order;
  out["conversion"] = fldp::to_string(conversion);
  if (a.curve && z > 0.0 && a.steps > 0) {
    const auto c = fldp::compose(fldp::rdp_sampled_gaussian(z, a.q, orders), a.steps);
    ordered_json points = ordered_json::array();
    for (std::size_t i = 0; i < c.orders.size(); ++i)
      points.push_back({{"order", c.orders[i]}, {"rdp", fldp::number_json(c.total(i))}});
    out["curve"] = points;
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

// convert-noise ---------------------------------------------------------------

struct ConvertArgs {
  double sigma = 0.0;
  std::string from;
  std::string to;
  double cohort_size = 1.0;
};

int run_convert(const ConvertArgs& a) {
  const auto from = fldp::parse_noise_kind(a.from);
  const auto to = fldp::parse_noise_kind(a.to);
  ordered_json out{{"sigma", a.sigma},
                   {"from", fldp::to_string(from)},
                   {"to", fldp::to_string(to)},
                   {"cohort_size", a.cohort_size},
                   {"result", fldp::convert_noise(a.sigma, from, to, a.cohort_size)}};
  for (auto k : {fldp::NoiseKind::kClient, fldp::NoiseKind::kAvg, fldp::NoiseKind::kSum})
    out["all"][std::string(fldp::to_string(k))] = fldp::convert_noise(a.sigma, from, k, a.cohort_size);
  std::cout << out.dump(2) << '\n';
  return 0;
}

// partition-stats -------------------------------------------------------------

struct PartitionArgs {
  std::string config;
  bool json = false;
};

int run_partition_stats(const PartitionArgs& a) {
  const auto config = load_any_config(a.config);
  const auto stats = fldp::partition_stats(fldp::build_population(config));
  write_text(std::nullopt, a.json ? fldp::to_json(stats).dump(2) + "\n" : fldp::format_partition_table(stats));
  return 0;
}

// summarize -------------------------------------------------------------------

struct SummarizeArgs {
  std::string metrics;
  std::string format = "csv";
  std::string out;
};

int run_summarize(const SummarizeArgs& a) {
  const auto s = fldp::summarize_file(a.metrics);
  const std::string text = a.format == "json" ? fldp::to_json(s).dump(2) + "\n" : fldp::to_csv(s);
  write_text(a.out.empty() ? std::nullopt : std::optional<fs::path>(a.out), text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Federated learning with user-level differential privacy: simulation and accounting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fldp::kEngineVersion));

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a federated simulation and write its outputs");
  simulate->add_option("--config", sim.config, "Config file (or a run_manifest.json)")->required();
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--workers", sim.workers, "Threads for the clients of a round")
      ->check(CLI::PositiveNumber);

  AccountantArgs acc;
  auto* accountant = app.add_subcommand("accountant", "Privacy loss of the subsampled Gaussian mechanism");
  accountant->add_option("--z", acc.z, "Noise multiplier");
  accountant->add_option("--sigma", acc.sigma, "Noise std (see --sigma-kind)");
  accountant->add_option("--sigma-kind", acc.sigma_kind, "client, avg or sum")->capture_default_str();
  accountant->add_option("--clip", acc.clip, "Clipping bound C");
  accountant->add_option("--population", acc.population, "Population size N");
  accountant->add_option("--cohort-size", acc.cohort_size, "Cohort size L (default q*N)");
  accountant->add_option("--q", acc.q, "Sampling rate")->required();
  accountant->add_option("--steps", acc.steps, "Number of central steps T")->required();
  accountant->add_option("--delta", acc.delta, "Target delta")->capture_default_str();
  accountant->add_option("--orders", acc.orders, "Comma-separated Renyi orders (default grid)");
  accountant->add_option("--conversion", acc.conversion, "improved or classic")->capture_default_str();
  accountant->add_option("--target-epsilon", acc.target_epsilon, "Calibrate z for this epsilon instead");
  accountant->add_flag("--curve", acc.curve, "Include the composed RDP curve");

  ConvertArgs conv;
  auto* convert = app.add_subcommand("convert-noise", "Convert a noise std between parametrizations");
  convert->add_option("--sigma", conv.sigma, "Noise std")->required();
  convert->add_option("--from", conv.from, "client, avg or sum")->required();
  convert->add_option("--to", conv.to, "client, avg or sum")->required();
  convert->add_option("--cohort-size", conv.cohort_size, "Cohort size L")->required();

  PartitionArgs part;
  auto* partition = app.add_subcommand("partition-stats", "Statistics of the population a config generates");
  partition->add_option("--config", part.config, "Config file")->required();
  partition->add_flag("--json", part.json, "JSON instead of a table");

  SummarizeArgs sum;
  auto* summarize = app.add_subcommand("summarize", "Per-layer summary of a metrics.jsonl file");
  summarize->add_option("--metrics", sum.metrics, "metrics.jsonl")->required();
  summarize->add_option("--format", sum.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  summarize->add_option("--out", sum.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*accountant) return run_accountant(acc);
    if (*convert) return run_convert(conv);
    if (*partition) return run_partition_stats(part);
    if (*summarize) return run_summarize(sum);
  } catch (const fldp::ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const fldp::StructuralError& e) {
    spdlog::error("invalid input: {}", e.what());
    return kExitConfig;
  } catch (const fldp::CalibrationError& e) {
    spdlog::error("calibration failed: {}", e.what());
    return kExitNumerical;
  } catch (const fldp::DomainError& e) {
    spdlog::error("invalid argument: {}", e.what());
    return kExitConfig;
  } catch (const fldp::NumericalError& e) {
    spdlog::error("numerical failure: {}", e.what());
    return kExitNumerical;
  } catch (const fldp::IoError& e) {
    spdlog::error("io error: {}", e.what());
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("io error: {}", e.what());
    return kExitIo;
  }
  return 0;
}
