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

// Simulation config files.
//
// A config is a JSON document with the sections model, population,
// federation, clip, privacy, central and accountant (see README.md for every
// field and its default). Parsing applies defaults, fills the privacy fields
// that are derivable from other sections (C, N, L, q, T), and rejects unknown
// keys and inconsistent values with the offending field path. Infinite
// values are written as the string "inf".

#ifndef FLDP_CONFIG_HPP_
#define FLDP_CONFIG_HPP_

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "fldp/data_synth.hpp"
#include "fldp/fed_engine.hpp"
#include "fldp/models.hpp"

namespace fldp {

struct SimulationConfig {
  ModelSpec model;
  PopulationSpec population;
  /// Replace the generated partition by its iid_shuffle (same seed as the population).
  bool iid_shuffle = false;
  FederationConfig federation;
  /// Path of the seed model as written in the config, if any.
  std::optional<std::string> seed_model_path;

  bool operator==(const SimulationConfig&) const = default;
};

/// base_dir resolves a relative seed_model path.
SimulationConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
SimulationConfig load_config(const std::filesystem::path& path);

/// Fully resolved config; parse_config(to_json(c)) == c.
nlohmann::ordered_json to_json(const SimulationConfig& c);

/// Number or the strings "inf" / "-inf".
double json_number(const nlohmann::json& j, const std::string& field);
/// Finite numbers as-is, infinities as strings.
nlohmann::ordered_json number_json(double v);

}  // namespace fldp

#endif  // FLDP_CONFIG_HPP_
