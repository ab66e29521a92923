#pragma once
// Spec execution: runs a single configuration or a sweep, writes slots.csv
// and summary.json per point, and for sweeps a combined plot.csv holding one
// row per (point, scheme) with means and standard errors.

#include <cstdio>
#include <string>
#include <vector>

#include "arqsched/config.hpp"
#include "arqsched/io.hpp"

namespace arqsched {

inline void write_run_outputs(const RunResult& res, const std::string& dir) {
  write_slots_csv(dir + "/slots.csv", res);
  write_summary_json(dir + "/summary.json", res);
  if (res.cfg.dump_channel) write_channel_csv(dir + "/channel.csv", res);
}

inline std::string plot_csv(const std::string& sweep_key,
                            const std::vector<double>& values,
                            const std::vector<RunResult>& results) {
  std::string out = sweep_key +
                    ",scheme,goodput_expected_mean,goodput_expected_se,"
                    "goodput_realized_mean,goodput_realized_se,total_power_mean,"
                    "gap_bound_mean\n";
  for (std::size_t i = 0; i < results.size(); ++i)
    for (const SchemeSummary& s : results[i].summaries) {
      out += format_double(values[i]);
      out += ',';
      out += scheme_name(s.scheme);
      out += ',';
      out += format_double(s.goodput_expected_mean);
      out += ',';
      out += format_double(s.goodput_expected_se);
      out += ',';
      out += format_double(s.goodput_realized_mean);
      out += ',';
      out += format_double(s.goodput_realized_se);
      out += ',';
      out += format_double(s.total_power_mean);
      out += ',';
      if (!std::isnan(s.gap_bound_mean)) out += format_double(s.gap_bound_mean);
      out += '\n';
    }
  return out;
}

// Runs the spec and writes everything under out_dir. Progress lines go to
// stderr unless quiet.
inline void execute_spec(const RunSpec& spec, const std::string& out_dir, bool quiet = false) {
  validate_spec(spec);
  auto progress_for = [&](const std::string& label) {
    return [label, quiet](int done, int total) {
      if (quiet) return;
      std::fprintf(stderr, "\r%s: realization %d/%d", label.c_str(), done, total);
      if (done == total) std::fprintf(stderr, "\n");
      std::fflush(stderr);
    };
  };
  if (!spec.sweep) {
    RunResult res = run_all(spec.base, progress_for("run"));
    write_run_outputs(res, out_dir);
    return;
  }
  std::vector<RunResult> results;
  results.reserve(spec.sweep->values.size());
  for (double v : spec.sweep->values) {
    RunConfig cfg = spec.base;
    apply_sweep_value(cfg, spec.sweep->key, v);
    std::string label = spec.sweep->key + "-" + format_double(v);
    RunResult res = run_all(cfg, progress_for(label));
    write_run_outputs(res, out_dir + "/" + label);
    results.push_back(std::move(res));
  }
  write_text_atomic(out_dir + "/plot.csv",
                    plot_csv(spec.sweep->key, spec.sweep->values, results));
}

}  // namespace arqsched
