#pragma once
// Flat key=value run configuration. A file sets base values; command-line
// flags are applied afterwards and win. snr_db and x_con are two ways to set
// the same budget, so assigning either clears the other; unknown keys are
// rejected with the offending line.

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "arqsched/engine.hpp"
#include "arqsched/text.hpp"

namespace arqsched {

struct SweepSpec {
  std::string key;             // one of the sweepable_keys below
  std::vector<double> values;  // applied one at a time onto the base config
};

struct RunSpec {
  RunConfig base;
  std::optional<SweepSpec> sweep;
};

inline const std::vector<std::string>& sweepable_keys() {
  static const std::vector<std::string> keys = {"particles", "alpha",  "subchannels",
                                                "users",     "snr_db", "x_con",
                                                "delay"};
  return keys;
}

namespace detail {

inline bool parse_bool(std::string_view s, const std::string& ctx) {
  if (s == "1" || s == "true" || s == "on" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "off" || s == "no") return false;
  throw std::invalid_argument(ctx + ": expected a boolean, got '" + std::string(s) + "'");
}

inline int parse_bounded_int(std::string_view s, const std::string& ctx) {
  long long v = parse_int(s, ctx);
  if (v < -(1ll << 31) || v > (1ll << 31))
    throw std::invalid_argument(ctx + ": value out of range");
  return static_cast<int>(v);
}

inline std::vector<double> parse_double_list(std::string_view s, const std::string& ctx) {
  std::vector<double> out;
  for (auto field : split(s, ',')) out.push_back(parse_double(trim(field), ctx));
  if (out.empty()) throw std::invalid_argument(ctx + ": expected at least one value");
  return out;
}

}  // namespace detail

inline UtilityKind parse_utility_kind(std::string_view s, const std::string& ctx) {
  if (s == "identity") return UtilityKind::identity;
  if (s == "weighted") return UtilityKind::weighted_identity;
  if (s == "capacity-log") return UtilityKind::capacity_log;
  throw std::invalid_argument(ctx + ": expected identity, weighted, or capacity-log, got '" +
                              std::string(s) + "'");
}

inline std::vector<Scheme> parse_scheme_list(std::string_view s, const std::string& ctx) {
  std::vector<Scheme> out;
  for (auto field : split(s, ',')) {
    auto t = trim(field);
    if (t.empty()) throw std::invalid_argument(ctx + ": empty scheme name");
    out.push_back(parse_scheme(t));
  }
  return normalize_schemes(out);
}

// Applies one value of a sweepable key.
inline void apply_sweep_value(RunConfig& cfg, const std::string& key, double v) {
  auto as_int = [&](const char* what) {
    int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
      throw std::invalid_argument(std::string("sweep ") + what + ": expected an integer, got " +
                                  format_double(v));
    return i;
  };
  if (key == "particles")
    cfg.particles = as_int("particles");
  else if (key == "alpha")
    cfg.channel.alpha = v;
  else if (key == "subchannels")
    cfg.channel.num_subchannels = as_int("subchannels");
  else if (key == "users")
    cfg.channel.num_users = as_int("users");
  else if (key == "snr_db") {
    cfg.snr_db = v;
    cfg.x_con.reset();
  } else if (key == "x_con")
    cfg.x_con = v;
  else if (key == "delay")
    cfg.channel.delay = as_int("delay");
  else
    throw std::invalid_argument("sweep key '" + key + "' is not sweepable");
}

// Applies one key=value pair onto the spec. ctx names the source location
// for diagnostics.
inline void apply_config_entry(RunSpec& spec, std::string_view key, std::string_view value,
                               const std::string& ctx) {
  RunConfig& cfg = spec.base;
  if (key == "subchannels")
    cfg.channel.num_subchannels = detail::parse_bounded_int(value, ctx);
  else if (key == "users")
    cfg.channel.num_users = detail::parse_bounded_int(value, ctx);
  else if (key == "taps")
    cfg.channel.num_taps = detail::parse_bounded_int(value, ctx);
  else if (key == "alpha")
    cfg.channel.alpha = parse_double(value, ctx);
  else if (key == "delay")
    cfg.channel.delay = detail::parse_bounded_int(value, ctx);
  else if (key == "mcs_count")
    cfg.mcs_count = detail::parse_bounded_int(value, ctx);
  else if (key == "mcs_table")
    cfg.mcs_override = McsTable::load_csv(std::string(value));
  else if (key == "utility")
    cfg.utility.kind = parse_utility_kind(value, ctx);
  else if (key == "weights")
    cfg.utility.weights = detail::parse_double_list(value, ctx);
  else if (key == "particles")
    cfg.particles = detail::parse_bounded_int(value, ctx);
  else if (key == "genie_particles")
    cfg.genie_particles = detail::parse_bounded_int(value, ctx);
  else if (key == "snr_db") {
    cfg.snr_db = parse_double(value, ctx);
    cfg.x_con.reset();
  } else if (key == "x_con")
    cfg.x_con = parse_double(value, ctx);
  else if (key == "slots")
    cfg.slots = detail::parse_bounded_int(value, ctx);
  else if (key == "warmup")
    cfg.warmup = detail::parse_bounded_int(value, ctx);
  else if (key == "realizations")
    cfg.realizations = detail::parse_bounded_int(value, ctx);
  else if (key == "seed")
    cfg.seed = static_cast<std::uint64_t>(parse_int(value, ctx));
  else if (key == "schemes")
    cfg.schemes = parse_scheme_list(value, ctx);
  else if (key == "kappa_rel")
    cfg.kappa_rel = parse_double(value, ctx);
  else if (key == "root_tol")
    cfg.root_tol = parse_double(value, ctx);
  else if (key == "resample")
    cfg.resample = detail::parse_bool(value, ctx);
  else if (key == "dump_channel")
    cfg.dump_channel = detail::parse_bool(value, ctx);
  else if (key == "sweep") {
    bool known = false;
    for (const auto& k : sweepable_keys()) known |= k == value;
    if (!known)
      throw std::invalid_argument(ctx + ": '" + std::string(value) + "' is not sweepable");
    if (!spec.sweep) spec.sweep.emplace();
    spec.sweep->key = std::string(value);
  } else if (key == "sweep_values") {
    if (!spec.sweep) spec.sweep.emplace();
    spec.sweep->values = detail::parse_double_list(value, ctx);
  } else
    throw std::invalid_argument(ctx + ": unknown key '" + std::string(key) + "'");
}

// Parses key=value lines; blank lines and # comments are skipped.
inline void apply_config_text(RunSpec& spec, const std::string& text,
                              const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    std::string ctx = source + " line " + std::to_string(lineno);
    if (eq == std::string_view::npos)
      throw std::invalid_argument(ctx + ": expected key=value, got '" + std::string(t) + "'");
    auto key = trim(t.substr(0, eq));
    auto value = trim(t.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument(ctx + ": empty key");
    apply_config_entry(spec, key, value, ctx);
  }
}

inline void load_config_file(RunSpec& spec, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(spec, ss.str(), path);
}

// A sweep must be fully specified and internally consistent before running.
inline void validate_spec(const RunSpec& spec) {
  if (spec.sweep) {
    if (spec.sweep->key.empty())
      throw std::invalid_argument("sweep_values given without a sweep key");
    if (spec.sweep->values.empty())
      throw std::invalid_argument("sweep '" + spec.sweep->key + "' has no sweep_values");
    for (double v : spec.sweep->values) {
      RunConfig probe = spec.base;
      apply_sweep_value(probe, spec.sweep->key, v);
      probe.validate();
    }
  } else {
    spec.base.validate();
  }
}

}  // namespace arqsched
