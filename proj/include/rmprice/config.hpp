#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rmprice/errors.hpp"
#include "rmprice/market.hpp"

namespace rmprice {

enum class Scale { small, large, custom };

inline std::string_view to_string(Scale s) {
  switch (s) {
    case Scale::small: return "small";
    case Scale::large: return "large";
    case Scale::custom: return "custom";
  }
  return "?";
}

inline std::optional<Scale> parse_scale(std::string_view name) {
  for (auto s : {Scale::small, Scale::large, Scale::custom})
    if (to_string(s) == name) return s;
  return std::nullopt;
}

/// Overwrites the population-size fields with a preset. `custom` leaves them alone.
inline void apply_scale(MarketConfig& config, Scale scale) {
  switch (scale) {
    case Scale::small:
      config.n_providers = 5;
      config.n_requests = 100;
      break;
    case Scale::large:
      config.n_providers = 15;
      config.n_requests = 1000;
      config.apps_per_provider = {100, 500};
      config.app_catalog_size = 0;
      break;
    case Scale::custom:
      break;
  }
}

struct ExperimentSpec {
  MarketConfig base;
  std::vector<Technique> techniques{Technique::external};
  std::vector<std::uint64_t> seeds{1};
  Scale scale = Scale::custom;
  std::string out_dir;
  int workers = 1;
  std::vector<VMModel> catalog = default_vm_catalog();

  void validate() const {
    if (techniques.empty()) throw ConfigError("technique list is empty");
    if (seeds.empty()) throw ConfigError("seed list is empty");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    base.validate();
  }
};

namespace detail {

struct ConfigEntry {
  std::string value;
  int line = 0;
};

[[noreturn]] inline void bad_value(const std::string& key, int line, const std::string& why) {
  throw ConfigError("config line " + std::to_string(line) + ", key '" + key + "': " + why);
}

inline int to_int(const std::string& key, const ConfigEntry& e) {
  long long v = 0;
  if (!parse_int(e.value, v)) bad_value(key, e.line, "expected an integer, got '" + e.value + "'");
  return static_cast<int>(v);
}

inline double to_double(const std::string& key, const ConfigEntry& e) {
  double v = 0;
  if (!parse_double(e.value, v)) bad_value(key, e.line, "expected a number, got '" + e.value + "'");
  return v;
}

inline bool to_bool(const std::string& key, const ConfigEntry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  bad_value(key, e.line, "expected true or false, got '" + e.value + "'");
}

template <class T, class Conv>
Range<T> to_range(const std::string& key, const ConfigEntry& e, Conv conv) {
  const auto parts = split(e.value, ',');
  if (parts.size() != 2) bad_value(key, e.line, "expected 'lo, hi'");
  const Range<T> r{conv(key, ConfigEntry{parts[0], e.line}), conv(key, ConfigEntry{parts[1], e.line})};
  if (r.lo > r.hi) bad_value(key, e.line, "empty range (lo > hi)");
  return r;
}

}  // namespace detail

/// Every key a config file may contain.
inline const std::vector<std::string_view>& config_keys() {
  static const std::vector<std::string_view> keys{
      "n_providers",      "n_requests",        "apps_per_provider", "app_catalog_size",
      "vms_per_provider", "services_per_app",  "gamma",             "omega_grid_size",
      "wtp_multiplier",   "tau_hours",         "alpha",             "beta",
      "investment",       "technique",         "seed",              "equilibrium_eps",
      "equilibrium_window", "equilibrium_measure", "r_max_floor",     "symmetric_providers", "strict_information",
      "stop_at_equilibrium", "tie_break",      "regret_averaging",  "vm_catalog",
      "scale",            "out",               "workers"};
  return keys;
}

inline std::vector<Technique> parse_technique_list(const std::string& text, int line) {
  std::vector<Technique> out;
  for (const auto& name : detail::split(text, ',')) {
    const auto t = parse_technique(name);
    if (!t) detail::bad_value("technique", line, "unknown technique '" + name + "'");
    out.push_back(*t);
  }
  return out;
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& text, int line) {
  std::vector<std::uint64_t> out;
  for (const auto& s : detail::split(text, ',')) {
    long long v = 0;
    if (!detail::parse_int(s, v) || v < 0) detail::bad_value("seed", line, "expected a non-negative integer");
    out.push_back(static_cast<std::uint64_t>(v));
  }
  return out;
}

/// Parses `key = value` lines ('#' starts a comment). Lists and ranges are
/// comma separated. A `scale` preset is applied before the other keys, so
/// explicit keys always win. Relative `vm_catalog` paths resolve against
/// `base_dir`.
inline ExperimentSpec parse_config_text(std::string_view text,
                                        const std::filesystem::path& base_dir = {}) {
  std::map<std::string, detail::ConfigEntry> entries;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string body = detail::trim(std::string_view(raw).substr(0, raw.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": missing key");
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (entries.count(key))
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    if (value.empty()) detail::bad_value(key, lineno, "missing value");
    entries[key] = {value, lineno};
  }

  ExperimentSpec spec;
  MarketConfig& c = spec.base;
  if (auto it = entries.find("scale"); it != entries.end()) {
    const auto s = parse_scale(it->second.value);
    if (!s) detail::bad_value("scale", it->second.line, "expected small, large or custom");
    spec.scale = *s;
    apply_scale(c, *s);
  }

  using Setter = std::function<void(const std::string&, const detail::ConfigEntry&)>;
  const auto ints = [](const std::string& k, const detail::ConfigEntry& e) { return detail::to_int(k, e); };
  const auto reals = [](const std::string& k, const detail::ConfigEntry& e) { return detail::to_double(k, e); };
  const std::map<std::string, Setter> setters{
      {"n_providers", [&](auto& k, auto& e) { c.n_providers = detail::to_int(k, e); }},
      {"n_requests", [&](auto& k, auto& e) { c.n_requests = detail::to_int(k, e); }},
      {"apps_per_provider", [&](auto& k, auto& e) { c.apps_per_provider = detail::to_range<int>(k, e, ints); }},
      {"app_catalog_size", [&](auto& k, auto& e) { c.app_catalog_size = detail::to_int(k, e); }},
      {"vms_per_provider", [&](auto& k, auto& e) { c.vms_per_provider = detail::to_range<int>(k, e, ints); }},
      {"services_per_app", [&](auto& k, auto& e) { c.services_per_app = detail::to_range<int>(k, e, ints); }},
      {"gamma", [&](auto& k, auto& e) { c.gamma = detail::to_double(k, e); }},
      {"omega_grid_size", [&](auto& k, auto& e) { c.omega_grid_size = detail::to_int(k, e); }},
      {"wtp_multiplier", [&](auto& k, auto& e) { c.wtp_multiplier = detail::to_range<double>(k, e, reals); }},
      {"tau_hours", [&](auto& k, auto& e) { c.tau_hours = detail::to_range<double>(k, e, reals); }},
      {"alpha", [&](auto& k, auto& e) { c.alpha = detail::to_range<double>(k, e, reals); }},
      {"beta", [&](auto& k, auto& e) { c.beta = detail::to_range<double>(k, e, reals); }},
      {"investment", [&](auto& k, auto& e) { c.investment = detail::to_range<double>(k, e, reals); }},
      {"technique", [&](auto&, auto& e) { spec.techniques = parse_technique_list(e.value, e.line); }},
      {"seed", [&](auto&, auto& e) { spec.seeds = parse_seed_list(e.value, e.line); }},
      {"equilibrium_eps", [&](auto& k, auto& e) { c.equilibrium_eps = detail::to_double(k, e); }},
      {"equilibrium_window", [&](auto& k, auto& e) { c.equilibrium_window = detail::to_int(k, e); }},
      {"equilibrium_measure",
       [&](auto& k, auto& e) {
         if (e.value == "step") c.equilibrium_measure = StabilityMeasure::step;
         else if (e.value == "drift") c.equilibrium_measure = StabilityMeasure::drift;
         else detail::bad_value(k, e.line, "expected step or drift");
       }},
      {"r_max_floor", [&](auto& k, auto& e) { c.r_max_floor = detail::to_double(k, e); }},
      {"symmetric_providers", [&](auto& k, auto& e) { c.symmetric_providers = detail::to_bool(k, e); }},
      {"strict_information", [&](auto& k, auto& e) { c.strict_information = detail::to_bool(k, e); }},
      {"stop_at_equilibrium", [&](auto& k, auto& e) { c.stop_at_equilibrium = detail::to_bool(k, e); }},
      {"tie_break",
       [&](auto& k, auto& e) {
         if (e.value == "random") c.tie_break = TieBreak::random_priority;
         else if (e.value == "lowest-id") c.tie_break = TieBreak::lowest_id;
         else detail::bad_value(k, e.line, "expected random or lowest-id");
       }},
      {"regret_averaging",
       [&](auto& k, auto& e) {
         if (e.value == "rounds") c.regret_averaging = RegretAveraging::rounds;
         else if (e.value == "occurrences") c.regret_averaging = RegretAveraging::occurrences;
         else detail::bad_value(k, e.line, "expected rounds or occurrences");
       }},
      {"vm_catalog",
       [&](auto& k, auto& e) {
         std::filesystem::path p(e.value);
         if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
         std::ifstream f(p);
         if (!f) detail::bad_value(k, e.line, "cannot open '" + p.string() + "'");
         std::stringstream buf;
         buf << f.rdbuf();
         spec.catalog = load_vm_catalog(buf.str());
       }},
      {"scale", [](auto&, auto&) {}},
      {"out", [&](auto&, auto& e) { spec.out_dir = e.value; }},
      {"workers", [&](auto& k, auto& e) { spec.workers = detail::to_int(k, e); }},
  };

  for (const auto& [key, entry] : entries) setters.at(key)(key, entry);

  if (!spec.techniques.empty()) c.technique = spec.techniques.front();
  if (!spec.seeds.empty()) c.seed = spec.seeds.front();

  try {
    spec.validate();
  } catch (const ConfigError& e) {
    // Point validation failures at the offending key when we can.
    const std::string msg = e.what();
    for (const auto& [key, entry] : entries)
      if (msg.rfind(key, 0) == 0)
        throw ConfigError("config line " + std::to_string(entry.line) + ", key '" + key + "': " + msg);
    throw;
  }
  return spec;
}

inline ExperimentSpec parse_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str(), path.parent_path());
}

}  // namespace rmprice
