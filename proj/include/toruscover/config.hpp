#pragma once

// Experiment configuration ingestion. Two sources, one schema:
//   - flat key = value text (comments with '#', arrays comma-separated)
//   - a manifest.json from a previous run (its "config" object is re-applied),
//     which is how a run is reproduced byte-identically.
// Unknown keys, malformed values, and invariant violations fail eagerly with
// the offending key named.

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "toruscover/experiments.hpp"

namespace toruscover::config {

using experiments::ExperimentConfig;
using json = nlohmann::ordered_json;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    fail_input("config key '" + key + "': expected a number, got '" + value + "'");
  return out;
}

inline long long parse_int(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    fail_input("config key '" + key + "': expected an integer, got '" + value + "'");
  return out;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    fail_input("config key '" + key + "': expected an unsigned integer, got '" +
               value + "'");
  return out;
}

inline Vec parse_array(const std::string& key, const std::string& value) {
  Vec out;
  std::string item;
  std::istringstream in(trim(value));
  while (std::getline(in, item, ','))
    out.push_back(parse_double(key, item));
  if (out.empty())
    fail_input("config key '" + key + "': expected a comma-separated list");
  return out;
}

}  // namespace detail

/// Assign one key of the flat schema. Unknown keys are input errors.
inline void apply_key(ExperimentConfig& cfg, const std::string& key,
                      const std::string& value) {
  using namespace detail;
  if (key == "body_kind") cfg.body_kind = trim(value);
  else if (key == "body_param") cfg.body_param = parse_double(key, value);
  else if (key == "ellipsoid_axes") cfg.ellipsoid_axes = parse_array(key, value);
  else if (key == "torus_sides") cfg.torus_sides = parse_array(key, value);
  else if (key == "intensity") cfg.intensity = parse_double(key, value);
  else if (key == "intensity_grid") cfg.intensity_grid = parse_array(key, value);
  else if (key == "trials") cfg.trials = parse_int(key, value);
  else if (key == "master_seed") cfg.master_seed = parse_u64(key, value);
  else if (key == "h") cfg.h = parse_double(key, value);
  else if (key == "net_norm") cfg.net_norm = trim(value);
  else if (key == "h_refine") cfg.h_refine = static_cast<int>(parse_int(key, value));
  else if (key == "undetermined_cap") cfg.undetermined_cap = parse_double(key, value);
  else if (key == "net_cardinality_cap") cfg.net_cardinality_cap = parse_double(key, value);
  else if (key == "mult_net_cap") cfg.mult_net_cap = parse_double(key, value);
  else if (key == "mult_trials") cfg.mult_trials = parse_int(key, value);
  else if (key == "bootstrap_resamples") cfg.bootstrap_resamples = parse_int(key, value);
  else if (key == "delta") cfg.delta = parse_double(key, value);
  else if (key == "eps_override") cfg.eps_override = parse_double(key, value);
  else if (key == "mu_override") cfg.mu_override = parse_double(key, value);
  else if (key == "packing_stream") cfg.packing_stream = trim(value);
  else if (key == "packing_stream_step") cfg.packing_stream_step = parse_double(key, value);
  else if (key == "packing_stream_count") cfg.packing_stream_count = parse_int(key, value);
  else if (key == "separation") cfg.separation = parse_double(key, value);
  else if (key == "separation_norm") cfg.separation_norm = trim(value);
  else if (key == "target_stream") cfg.target_stream = trim(value);
  else if (key == "target_stream_step") cfg.target_stream_step = parse_double(key, value);
  else if (key == "target_stream_count") cfg.target_stream_count = parse_int(key, value);
  else if (key == "f_n") cfg.f_n = parse_double(key, value);
  else if (key == "omega") cfg.omega = parse_double(key, value);
  else if (key == "mc_samples") cfg.mc_samples = parse_int(key, value);
  else if (key == "expected_points_cap") cfg.expected_points_cap = parse_double(key, value);
  else fail_input("unknown config key '" + key + "'");
}

/// All keys of the flat schema, in declaration order.
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "body_kind", "body_param", "ellipsoid_axes", "torus_sides", "intensity",
      "intensity_grid", "trials", "master_seed", "h", "net_norm", "h_refine",
      "undetermined_cap", "net_cardinality_cap", "mult_net_cap", "mult_trials",
      "bootstrap_resamples", "delta", "eps_override", "mu_override",
      "packing_stream", "packing_stream_step", "packing_stream_count",
      "separation", "separation_norm", "target_stream", "target_stream_step",
      "target_stream_count", "f_n", "omega", "mc_samples",
      "expected_points_cap"};
  return keys;
}

/// Fully materialized config (every key present), the shape echoed into the
/// manifest and accepted back by load_config.
inline json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["body_kind"] = cfg.body_kind;
  j["body_param"] = cfg.body_param;
  j["ellipsoid_axes"] = cfg.ellipsoid_axes;
  j["torus_sides"] = cfg.torus_sides;
  j["intensity"] = cfg.intensity;
  j["intensity_grid"] = cfg.intensity_grid;
  j["trials"] = cfg.trials;
  j["master_seed"] = cfg.master_seed;
  j["h"] = cfg.h;
  j["net_norm"] = cfg.net_norm;
  j["h_refine"] = cfg.h_refine;
  j["undetermined_cap"] = cfg.undetermined_cap;
  j["net_cardinality_cap"] = cfg.net_cardinality_cap;
  j["mult_net_cap"] = cfg.mult_net_cap;
  j["mult_trials"] = cfg.mult_trials;
  j["bootstrap_resamples"] = cfg.bootstrap_resamples;
  j["delta"] = cfg.delta;
  j["eps_override"] = cfg.eps_override;
  j["mu_override"] = cfg.mu_override;
  j["packing_stream"] = cfg.packing_stream;
  j["packing_stream_step"] = cfg.packing_stream_step;
  j["packing_stream_count"] = cfg.packing_stream_count;
  j["separation"] = cfg.separation;
  j["separation_norm"] = cfg.separation_norm;
  j["target_stream"] = cfg.target_stream;
  j["target_stream_step"] = cfg.target_stream_step;
  j["target_stream_count"] = cfg.target_stream_count;
  j["f_n"] = cfg.f_n;
  j["omega"] = cfg.omega;
  j["mc_samples"] = cfg.mc_samples;
  j["expected_points_cap"] = cfg.expected_points_cap;
  return j;
}

namespace detail {

inline void apply_json_value(ExperimentConfig& cfg, const std::string& key,
                             const json& v) {
  if (v.is_string()) {
    apply_key(cfg, key, v.get<std::string>());
    return;
  }
  if (v.is_array()) {
    std::string joined;
    for (const auto& e : v) {
      if (!joined.empty()) joined += ',';
      if (e.is_number()) {
        std::ostringstream os;
        os.precision(17);
        os << e.get<double>();
        joined += os.str();
      } else {
        fail_input("config key '" + key + "': array entries must be numbers");
      }
    }
    if (v.empty()) {
      // empty arrays reset list-valued keys
      if (key == "intensity_grid") cfg.intensity_grid.clear();
      else if (key == "ellipsoid_axes") cfg.ellipsoid_axes.clear();
      else fail_input("config key '" + key + "': empty array not allowed");
      return;
    }
    apply_key(cfg, key, joined);
    return;
  }
  if (v.is_boolean()) {
    apply_key(cfg, key, v.get<bool>() ? "1" : "0");
    return;
  }
  if (v.is_number_unsigned()) {
    apply_key(cfg, key, std::to_string(v.get<std::uint64_t>()));
    return;
  }
  if (v.is_number_integer()) {
    apply_key(cfg, key, std::to_string(v.get<long long>()));
    return;
  }
  if (v.is_number_float()) {
    std::ostringstream os;
    os.precision(17);
    os << v.get<double>();
    apply_key(cfg, key, os.str());
    return;
  }
  fail_input("config key '" + key + "': unsupported JSON value type");
}

}  // namespace detail

/// Parse flat `key = value` text into a config on top of defaults.
inline ExperimentConfig parse_flat_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail_input("config line " + std::to_string(line_no) +
                 ": expected key = value, got '" + line + "'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      fail_input("config line " + std::to_string(line_no) + ": empty key");
    apply_key(cfg, key, value);
  }
  return cfg;
}

/// Load a config file: either flat key = value text or a manifest.json /
/// config.json whose "config" object (or the whole object) holds the keys.
inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_input("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
      fail_input("config file '" + path + "' looks like JSON but does not parse");
    const json& conf = j.contains("config") ? j["config"] : j;
    if (!conf.is_object())
      fail_input("config file '" + path + "': expected an object of config keys");
    ExperimentConfig cfg;
    for (const auto& [key, value] : conf.items())
      detail::apply_json_value(cfg, key, value);
    return cfg;
  }
  return parse_flat_config(text);
}

}  // namespace toruscover::config
