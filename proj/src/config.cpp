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

#include "fldp/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "fldp/errors.hpp"

namespace fldp {

double json_number(const nlohmann::json& j, const std::string& field) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf" || s == "-infinity") return -std::numeric_limits<double>::infinity();
  }
  throw ConfigError(field, "expected a number or \"inf\"");
}

nlohmann::ordered_json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

namespace {

// Typed access to one JSON object that remembers which keys were read, so
// leftovers can be rejected as unknown.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return json_number(j_.at(key), field(key));
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      throw ConfigError(field(key), "expected a non-negative integer");
    return v.get<std::size_t>();
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
    return v.get<std::int64_t>();
  }
  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      throw ConfigError(field(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }
  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "expected a boolean");
    return v.get<bool>();
  }
  std::optional<Section> child(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return Section(j_.at(key), field(key));
  }
  const nlohmann::json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError(field(item.key()), "unknown key");
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Fn>
auto parse_enum(Section& s, const std::string& key, const std::string& fallback, Fn parse) {
  const std::string value = s.text(key, fallback);
  try {
    return parse(value);
  } catch (const ConfigError& e) {
    throw ConfigError(s.field(key), "unknown value '" + value + "'");
  }
}

ModelSpec parse_model(Section s) {
  ModelSpec m;
  m.kind = parse_enum(s, "kind", std::string(to_string(m.kind)), parse_model_kind);
  m.input_dim = s.count("input_dim", m.input_dim);
  m.hidden_dim = s.count("hidden_dim", m.hidden_dim);
  m.num_classes = s.count("num_classes", m.num_classes);
  m.seq_len = s.count("seq_len", m.seq_len);
  m.layernorm_epsilon = s.number("layernorm_epsilon", m.layernorm_epsilon);
  s.finish();
  m.validate();
  return m;
}

PopulationSpec parse_population(Section s, const ModelSpec& model, bool& iid) {
  PopulationSpec p;
  p.num_clients = s.count("num_clients", p.num_clients);
  if (auto c = s.child("examples_per_client")) {
    auto& d = p.examples_per_client;
    d.kind = parse_enum(*c, "kind", std::string(to_string(d.kind)), parse_count_kind);
    d.count = c->count("count", d.count);
    d.log_mean = c->number("log_mean", d.log_mean);
    d.log_std = c->number("log_std", d.log_std);
    d.exponent = c->number("exponent", d.exponent);
    d.min_count = c->count("min_count", d.min_count);
    d.max_count = c->count("max_count", d.max_count);
    c->finish();
  }
  p.label_skew_alpha = s.number("label_skew_alpha", p.label_skew_alpha);
  p.num_classes = s.count("num_classes", model.num_classes);
  p.input_dim = s.count("input_dim", model.example_dim());
  p.noise_level = s.number("noise_level", p.noise_level);
  p.class_separation = s.number("class_separation", p.class_separation);
  if (s.has("feature_scale")) {
    const auto& v = s.raw("feature_scale");
    if (!v.is_array()) throw ConfigError(s.field("feature_scale"), "expected an array of numbers");
    for (const auto& x : v) p.feature_scale.push_back(json_number(x, s.field("feature_scale")));
  }
  p.probe_size = s.count("probe_size", p.probe_size);
  p.seed = s.seed("seed", p.seed);
  iid = s.flag("iid_shuffle", false);
  s.finish();
  if (p.num_classes != model.num_classes)
    throw ConfigError("population.num_classes", "must equal model.num_classes");
  if (p.input_dim != model.example_dim())
    throw ConfigError("population.input_dim", "must equal the model's features per example (" +
                                                  std::to_string(model.example_dim()) + ")");
  p.validate();
  return p;
}

void parse_federation(Section s, FederationConfig& f) {
  f.rounds = s.integer("rounds", f.rounds);
  if (auto c = s.child("cohort")) {
    f.cohort.mode = parse_enum(*c, "mode", std::string(to_string(f.cohort.mode)), parse_cohort_mode);
    f.cohort.size = c->count("size", f.cohort.size);
    f.cohort.rate = c->number("rate", f.cohort.rate);
    c->finish();
  }
  if (auto l = s.child("local")) {
    f.local.mode = parse_enum(*l, "mode", std::string(to_string(f.local.mode)), parse_local_mode);
    f.local.count = l->count("count", f.local.count);
    f.local.batch_size = l->count("batch_size", f.local.batch_size);
    f.local.lr = l->number("lr", f.local.lr);
    f.local.clip = l->number("clip", f.local.clip);
    l->finish();
  }
  f.fedprox_mu = s.number("fedprox_mu", f.fedprox_mu);
  s.finish();
}

void parse_clip(Section s, ClipSpec& c) {
  c.bound = s.number("bound", c.bound);
  c.variant = parse_enum(s, "variant", std::string(to_string(c.variant)), parse_clip_variant);
  if (s.has("weights")) {
    const auto& w = s.raw("weights");
    if (!w.is_object()) throw ConfigError(s.field("weights"), "expected an object of layer weights");
    for (const auto& item : w.items())
      c.weights[item.key()] = json_number(item.value(), s.field("weights") + "." + item.key());
  }
  s.finish();
}

void parse_central(Section s, CentralConfig& c) {
  c.optimizer = parse_enum(s, "optimizer", std::string(to_string(c.optimizer)), parse_optimizer_kind);
  c.hyper.beta1 = s.number("beta1", c.hyper.beta1);
  c.hyper.beta2 = s.number("beta2", c.hyper.beta2);
  c.hyper.epsilon = s.number("epsilon", c.hyper.epsilon);
  c.hyper.momentum = s.number("momentum", c.hyper.momentum);
  c.hyper.weight_decay = s.number("weight_decay", c.hyper.weight_decay);
  c.hyper.trust_clip = s.number("trust_clip", c.hyper.trust_clip);
  if (auto sch = s.child("schedule")) {
    c.schedule.kind = parse_enum(*sch, "kind", std::string(to_string(c.schedule.kind)), parse_schedule_kind);
    c.schedule.base_lr = sch->number("base_lr", c.schedule.base_lr);
    c.schedule.decay_start = sch->integer("decay_start", c.schedule.decay_start);
    c.schedule.decay_rate = sch->number("decay_rate", c.schedule.decay_rate);
    c.schedule.transition_steps = sch->integer("transition_steps", c.schedule.transition_steps);
    sch->finish();
  }
  s.finish();
}

// Fills derivable privacy fields and rejects explicit values that disagree.
void parse_privacy(Section s, FederationConfig& f, std::size_t population_size) {
  auto& p = f.privacy;
  p.sigma = s.number("sigma", 0.0);
  p.sigma_kind = parse_enum(s, "sigma_kind", "client", parse_noise_kind);
  p.delta = s.number("delta", p.delta);
  const double n = static_cast<double>(population_size);
  const double derived_rate = f.cohort.mode == CohortMode::kFixedSize
                                  ? static_cast<double>(f.cohort.size) / n
                                  : f.cohort.rate;
  const double derived_cohort = f.cohort.mode == CohortMode::kFixedSize
                                    ? static_cast<double>(f.cohort.size)
                                    : f.cohort.rate * n;
  p.clip_bound = s.number("clip_bound", f.clip.bound);
  p.population = s.count("population", population_size);
  p.sampling_rate = s.number("sampling_rate", derived_rate);
  p.cohort_size = s.number("cohort_size", derived_cohort);
  p.steps = s.integer("steps", f.rounds);
  if (s.has("noise_mask")) {
    const auto& v = s.raw("noise_mask");
    if (!v.is_array()) throw ConfigError(s.field("noise_mask"), "expected an array of layer names");
    std::set<std::string> names;
    for (const auto& x : v) {
      if (!x.is_string()) throw ConfigError(s.field("noise_mask"), "expected layer names");
      names.insert(x.get<std::string>());
    }
    f.noise_mask = NoiseMask::only(std::move(names));
  }
  s.finish();
  if (!(p.clip_bound == f.clip.bound))
    throw ConfigError("privacy.clip_bound", "privacy.clip_bound and clip.bound must be equal");
}

void parse_accountant(Section s, FederationConfig& f) {
  if (s.has("orders")) {
    const auto& v = s.raw("orders");
    if (!v.is_array() || v.empty()) throw ConfigError(s.field("orders"), "expected a non-empty array");
    f.orders.clear();
    for (const auto& x : v) f.orders.push_back(json_number(x, s.field("orders")));
  }
  f.conversion = parse_enum(s, "conversion", std::string(to_string(f.conversion)), parse_conversion);
  s.finish();
}

}  // namespace

SimulationConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  SimulationConfig c;
  Section root(j, "");
  c.federation.seed = root.seed("seed", 0);
  auto model = root.child("model");
  if (!model) throw ConfigError("model", "missing section");
  c.model = parse_model(*model);
  auto population = root.child("population");
  if (!population) throw ConfigError("population", "missing section");
  c.population = parse_population(*population, c.model, c.iid_shuffle);
  auto& f = c.federation;
  if (auto s = root.child("federation")) parse_federation(*s, f);
  if (auto s = root.child("clip")) parse_clip(*s, f.clip);
  if (auto s = root.child("central")) parse_central(*s, f.central);
  if (auto s = root.child("accountant")) parse_accountant(*s, f);
  {
    static const nlohmann::json kEmpty = nlohmann::json::object();
    auto s = root.child("privacy");
    parse_privacy(s ? *s : Section(kEmpty, "privacy"), f, c.population.num_clients);
  }
  if (root.has("seed_model")) {
    c.seed_model_path = root.text("seed_model", "");
    std::filesystem::path path(*c.seed_model_path);
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    std::ifstream in(path);
    if (!in) throw ConfigError("seed_model", "cannot open '" + path.string() + "'");
    try {
      f.seed_model = param_tree_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("seed_model", e.what());
    } catch (const StructuralError& e) {
      throw ConfigError("seed_model", e.what());
    }
  }
  root.finish();
  f.validate(c.population.num_clients);
  return c;
}

SimulationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j, path.parent_path());
}

nlohmann::ordered_json to_json(const SimulationConfig& c) {
  using nlohmann::ordered_json;
  const auto& f = c.federation;
  ordered_json j;
  j["seed"] = f.seed;
  j["model"] = {{"kind", to_string(c.model.kind)},
                {"input_dim", c.model.input_dim},
                {"hidden_dim", c.model.hidden_dim},
                {"num_classes", c.model.num_classes},
                {"seq_len", c.model.seq_len},
                {"layernorm_epsilon", c.model.layernorm_epsilon}};
  const auto& p = c.population;
  const auto& d = p.examples_per_client;
  ordered_json scale = ordered_json::array();
  for (double v : p.feature_scale) scale.push_back(number_json(v));
  j["population"] = {{"num_clients", p.num_clients},
                     {"examples_per_client",
                      {{"kind", to_string(d.kind)},
                       {"count", d.count},
                       {"log_mean", d.log_mean},
                       {"log_std", d.log_std},
                       {"exponent", d.exponent},
                       {"min_count", d.min_count},
                       {"max_count", d.max_count}}},
                     {"label_skew_alpha", number_json(p.label_skew_alpha)},
                     {"num_classes", p.num_classes},
                     {"input_dim", p.input_dim},
                     {"noise_level", p.noise_level},
                     {"class_separation", p.class_separation},
                     {"feature_scale", scale},
                     {"probe_size", p.probe_size},
                     {"seed", p.seed},
                     {"iid_shuffle", c.iid_shuffle}};
  j["federation"] = {{"rounds", f.rounds},
                     {"cohort",
                      {{"mode", to_string(f.cohort.mode)}, {"size", f.cohort.size}, {"rate", f.cohort.rate}}},
                     {"local",
                      {{"mode", to_string(f.local.mode)},
                       {"count", f.local.count},
                       {"batch_size", f.local.batch_size},
                       {"lr", f.local.lr},
                       {"clip", number_json(f.local.clip)}}},
                     {"fedprox_mu", f.fedprox_mu}};
  ordered_json weights = ordered_json::object();
  for (const auto& [name, w] : f.clip.weights) weights[name] = w;
  j["clip"] = {{"bound", number_json(f.clip.bound)}, {"variant", to_string(f.clip.variant)}, {"weights", weights}};
  const auto& pr = f.privacy;
  j["privacy"] = {{"sigma", pr.sigma},
                  {"sigma_kind", to_string(pr.sigma_kind)},
                  {"delta", pr.delta},
                  {"clip_bound", number_json(pr.clip_bound)},
                  {"population", pr.population},
                  {"sampling_rate", pr.sampling_rate},
                  {"cohort_size", pr.cohort_size},
                  {"steps", pr.steps}};
  if (f.noise_mask.included_layers) {
    ordered_json names = ordered_json::array();
    for (const auto& n : *f.noise_mask.included_layers) names.push_back(n);
    j["privacy"]["noise_mask"] = names;
  }
  const auto& ce = f.central;
  j["central"] = {{"optimizer", to_string(ce.optimizer)},
                  {"beta1", ce.hyper.beta1},
                  {"beta2", ce.hyper.beta2},
                  {"epsilon", ce.hyper.epsilon},
                  {"momentum", ce.hyper.momentum},
                  {"weight_decay", ce.hyper.weight_decay},
                  {"trust_clip", ce.hyper.trust_clip},
                  {"schedule",
                   {{"kind", to_string(ce.schedule.kind)},
                    {"base_lr", ce.schedule.base_lr},
                    {"decay_start", ce.schedule.decay_start},
                    {"decay_rate", ce.schedule.decay_rate},
                    {"transition_steps", ce.schedule.transition_steps}}}};
  j["accountant"] = {{"orders", f.orders}, {"conversion", to_string(f.conversion)}};
  if (c.seed_model_path) j["seed_model"] = *c.seed_model_path;
  return j;
}

}  // namespace fldp
