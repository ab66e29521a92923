#pragma once
// Command-line front end. Subcommand `run` executes an ad-hoc configuration,
// `preset <name>` executes a named experiment. Precedence per setting:
// preset, then config file, then flags. Every typed flag funnels through the
// same key=value appliers as the config file, so validation and diagnostics
// are identical for both paths.

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "arqsched/config.hpp"
#include "arqsched/presets.hpp"
#include "arqsched/run.hpp"

namespace arqsched {

namespace detail {

struct CliState {
  std::string config_path;
  std::string out_dir = "out";
  bool quiet = false;
  std::string preset_name;
  // (config key, raw value, diagnostic context), applied after the file.
  std::vector<std::array<std::string, 3>> kvs;
};

inline void add_kv_option(CLI::App* cmd, CliState& st, const std::string& flag,
                          const std::string& key, const std::string& desc) {
  std::string ctx = "flag " + flag.substr(0, flag.find(','));
  cmd->add_option_function<std::string>(
         flag,
         [&st, key, ctx](const std::string& v) {
           st.kvs.push_back({key, v, ctx});
         },
         desc)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

inline void add_kv_flag(CLI::App* cmd, CliState& st, const std::string& flag,
                        const std::string& key, const std::string& desc) {
  std::string ctx = "flag " + flag;
  cmd->add_flag_callback(
      flag, [&st, key, ctx] { st.kvs.push_back({key, "1", ctx}); }, desc);
}

inline void add_common_flags(CLI::App* cmd, CliState& st) {
  cmd->add_option("--config", st.config_path, "key=value config file, applied before flags")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_kv_option(cmd, st, "--N,--subchannels", "subchannels", "number of subchannels");
  add_kv_option(cmd, st, "--K,--users", "users", "number of users");
  add_kv_option(cmd, st, "--L,--taps", "taps", "channel taps per user");
  add_kv_option(cmd, st, "--M,--mcs-count", "mcs_count",
                "entries of the default modulation family");
  add_kv_option(cmd, st, "--alpha", "alpha", "channel innovation rate in (0, 1]");
  add_kv_option(cmd, st, "--delay", "delay", "feedback delay in slots");
  add_kv_option(cmd, st, "--S,--particles", "particles", "tracked posterior particles");
  add_kv_option(cmd, st, "--genie-particles", "genie_particles",
                "causal genie posterior particles");
  add_kv_option(cmd, st, "--snr-db", "snr_db", "sets budget = 10^(snr/10) * subchannels");
  add_kv_option(cmd, st, "--x-con", "x_con",
                "explicit total power budget; overrides --snr-db when both are given");
  add_kv_option(cmd, st, "--slots", "slots", "transmission slots per realization");
  add_kv_option(cmd, st, "--warmup", "warmup", "slots excluded from summary averages");
  add_kv_option(cmd, st, "--realizations", "realizations", "independent channel realizations");
  add_kv_option(cmd, st, "--seed", "seed", "master seed");
  add_kv_option(cmd, st, "--schemes", "schemes",
                "comma list of proposed,cgg,ncgg,fprus");
  add_kv_option(cmd, st, "--utility", "utility", "identity, weighted, or capacity-log");
  add_kv_option(cmd, st, "--weights", "weights", "per-user weights (weighted utility)");
  add_kv_option(cmd, st, "--mcs-table", "mcs_table", "CSV file overriding the entry table");
  add_kv_option(cmd, st, "--kappa-rel", "kappa_rel",
                "dual bisection tolerance relative to the upper multiplier bound");
  add_kv_option(cmd, st, "--root-tol", "root_tol", "power root relative tolerance");
  add_kv_option(cmd, st, "--sweep", "sweep", "sweep key (particles, alpha, subchannels, ...)");
  add_kv_option(cmd, st, "--sweep-values", "sweep_values", "comma list of sweep values");
  add_kv_flag(cmd, st, "--resample", "resample",
              "systematic resampling of the tracked belief");
  add_kv_flag(cmd, st, "--dump-channel", "dump_channel", "also write the true gains CSV");
  cmd->add_option("--out-dir", st.out_dir, "output directory")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  cmd->add_flag("--quiet", st.quiet, "suppress progress output");
}

// snr_db before x_con so an explicit budget wins when both flags are given,
// regardless of their order on the command line.
inline void apply_cli_kvs(RunSpec& spec, const CliState& st) {
  for (const auto& kv : st.kvs)
    if (kv[0] != "snr_db" && kv[0] != "x_con") apply_config_entry(spec, kv[0], kv[1], kv[2]);
  for (const auto& kv : st.kvs)
    if (kv[0] == "snr_db") apply_config_entry(spec, kv[0], kv[1], kv[2]);
  for (const auto& kv : st.kvs)
    if (kv[0] == "x_con") apply_config_entry(spec, kv[0], kv[1], kv[2]);
}

inline int execute_cli(RunSpec spec, const CliState& st) {
  if (!st.config_path.empty()) load_config_file(spec, st.config_path);
  apply_cli_kvs(spec, st);
  execute_spec(spec, st.out_dir, st.quiet);
  return 0;
}

}  // namespace detail

inline int run_cli(int argc, char** argv) {
  CLI::App app{"OFDMA downlink scheduling testbed: tracked-posterior allocation "
               "against genie and blind baselines"};
  app.require_subcommand(1);

  detail::CliState run_state;
  CLI::App* run_cmd = app.add_subcommand("run", "run one configuration or sweep");
  detail::add_common_flags(run_cmd, run_state);

  detail::CliState preset_state;
  CLI::App* preset_cmd = app.add_subcommand("preset", "run a named experiment");
  std::string names_help = "one of:";
  for (const auto& n : preset_names()) names_help += " " + n;
  preset_cmd->add_option("name", preset_state.preset_name, names_help)->required();
  detail::add_common_flags(preset_cmd, preset_state);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run_cmd->parsed()) return detail::execute_cli(RunSpec{}, run_state);
    if (preset_cmd->parsed())
      return detail::execute_cli(make_preset(preset_state.preset_name), preset_state);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace arqsched
