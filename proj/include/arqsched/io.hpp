#pragma once
// Result persistence: per-slot CSV, JSON summary, and optional channel trace.
// Every file embeds enough of the resolved configuration to be re-run, all
// numbers are shortest round-trip formatted, and writes are atomic
// (temp-then-rename) so a crash never leaves a truncated file behind.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "arqsched/engine.hpp"
#include "arqsched/text.hpp"

namespace arqsched {

inline void write_text_atomic(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline std::string utility_name(const UtilitySpec& u) {
  switch (u.kind) {
    case UtilityKind::identity: return "identity";
    case UtilityKind::weighted_identity: return "weighted";
    case UtilityKind::capacity_log: return "capacity-log";
  }
  return "?";
}

// Per-slot long-format table. The gap-bound column is populated only for the
// tracked scheme; other schemes carry an empty field.
inline std::string slots_csv(const RunResult& res) {
  std::string out =
      "realization,slot,scheme,goodput_expected,goodput_realized,total_power,gap_bound\n";
  for (const auto& r : res.realizations)
    for (const auto& trace : r.traces) {
      const char* name = scheme_name(trace.scheme);
      for (const SlotRecord& rec : trace.slots) {
        out += std::to_string(r.realization);
        out += ',';
        out += std::to_string(rec.slot);
        out += ',';
        out += name;
        out += ',';
        out += format_double(rec.goodput_expected);
        out += ',';
        out += format_double(rec.goodput_realized);
        out += ',';
        out += format_double(rec.total_power);
        out += ',';
        if (!std::isnan(rec.gap_bound)) out += format_double(rec.gap_bound);
        out += '\n';
      }
    }
  return out;
}

inline nlohmann::json config_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["subchannels"] = cfg.channel.num_subchannels;
  j["users"] = cfg.channel.num_users;
  j["taps"] = cfg.channel.num_taps;
  j["alpha"] = cfg.channel.alpha;
  j["delay"] = cfg.channel.delay;
  j["mcs_count"] = cfg.mcs_override ? cfg.mcs_override->size() : cfg.mcs_count;
  j["mcs_family"] = cfg.mcs_override ? "custom" : "uncoded-qam";
  j["utility"] = utility_name(cfg.utility);
  if (cfg.utility.kind == UtilityKind::weighted_identity) j["weights"] = cfg.utility.weights;
  j["particles"] = cfg.particles;
  j["genie_particles"] = cfg.genie_particles;
  j["snr_db"] = cfg.snr_db;
  if (cfg.x_con)
    j["x_con"] = *cfg.x_con;
  else
    j["x_con"] = nullptr;
  j["budget"] = cfg.budget();
  j["slots"] = cfg.slots;
  j["warmup"] = cfg.warmup;
  j["realizations"] = cfg.realizations;
  j["seed"] = cfg.seed;
  nlohmann::json schemes = nlohmann::json::array();
  for (Scheme s : normalize_schemes(cfg.schemes)) schemes.push_back(scheme_name(s));
  j["schemes"] = schemes;
  j["kappa_rel"] = cfg.kappa_rel;
  j["root_tol"] = cfg.root_tol;
  j["resample"] = cfg.resample;
  return j;
}

inline nlohmann::json summary_json(const RunResult& res) {
  nlohmann::json j;
  j["config"] = config_json(res.cfg);
  j["headline_metric"] = "goodput_expected";
  j["metric_notes"] =
      "goodput_expected sums (1 - error(true gain)) * rate over scheduled subchannels; "
      "goodput_realized counts bits of delivered packets; means exclude warmup slots";
  nlohmann::json schemes;
  for (const SchemeSummary& s : res.summaries) {
    nlohmann::json e;
    e["goodput_expected"] = {{"mean", s.goodput_expected_mean}, {"se", s.goodput_expected_se}};
    e["goodput_realized"] = {{"mean", s.goodput_realized_mean}, {"se", s.goodput_realized_se}};
    e["total_power_mean"] = s.total_power_mean;
    if (!std::isnan(s.gap_bound_mean)) e["gap_bound_mean"] = s.gap_bound_mean;
    schemes[scheme_name(s.scheme)] = e;
  }
  j["schemes"] = schemes;
  long resets = 0;
  bool tracked = false;
  for (const auto& r : res.realizations)
    for (const auto& trace : r.traces)
      if (trace.scheme == Scheme::proposed) {
        resets += trace.degenerate_resets;
        tracked = true;
      }
  if (tracked) j["belief_degenerate_resets"] = resets;
  return j;
}

inline void write_slots_csv(const std::string& path, const RunResult& res) {
  write_text_atomic(path, slots_csv(res));
}

inline void write_summary_json(const std::string& path, const RunResult& res) {
  write_text_atomic(path, summary_json(res).dump(2) + "\n");
}

// True per-slot gains, present only when the run kept them.
inline std::string channel_csv(const RunResult& res) {
  std::string out = "realization,slot,user,subchannel,gain\n";
  int N = res.cfg.channel.num_subchannels;
  int K = res.cfg.channel.num_users;
  for (const auto& r : res.realizations) {
    std::size_t per_slot = static_cast<std::size_t>(K) * N;
    std::size_t slots = r.channel_dump.size() / (per_slot ? per_slot : 1);
    for (std::size_t t = 0; t < slots; ++t)
      for (int k = 0; k < K; ++k)
        for (int n = 0; n < N; ++n) {
          out += std::to_string(r.realization);
          out += ',';
          out += std::to_string(static_cast<int>(t) + 1);
          out += ',';
          out += std::to_string(k);
          out += ',';
          out += std::to_string(n);
          out += ',';
          out += format_double(r.channel_dump[t * per_slot + static_cast<std::size_t>(k) * N + n]);
          out += '\n';
        }
  }
  return out;
}

inline void write_channel_csv(const std::string& path, const RunResult& res) {
  write_text_atomic(path, channel_csv(res));
}

}  // namespace arqsched
