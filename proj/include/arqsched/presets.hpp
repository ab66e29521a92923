#pragma once
// Named experiment presets. Each one reproduces a comparative study's axes:
// a single time trace, then sweeps over particle count, fading rate,
// subchannel count (budget scaling with it or pinned), user count, and SNR.
// Grids are log- or octave-spaced around the reference operating point
// (N=32, K=8, L=2, alpha=1e-3, d=1, S=30, SNR=10dB).

#include <stdexcept>
#include <string>
#include <vector>

#include "arqsched/config.hpp"

namespace arqsched {

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "fig-time-trace",      "fig-particles", "fig-alpha", "fig-N-scaled-power",
      "fig-N-fixed-power",   "fig-K",         "fig-SNR"};
  return names;
}

inline RunSpec make_preset(const std::string& name) {
  RunSpec spec;
  spec.base.realizations = 100;
  if (name == "fig-time-trace") {
    spec.base.realizations = 1;
    spec.base.warmup = 0;
  } else if (name == "fig-particles") {
    spec.sweep = SweepSpec{"particles", {1, 2, 5, 10, 20, 30, 50}};
  } else if (name == "fig-alpha") {
    spec.sweep = SweepSpec{"alpha", {1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 1e-1}};
  } else if (name == "fig-N-scaled-power") {
    spec.sweep = SweepSpec{"subchannels", {8, 16, 32, 64}};
  } else if (name == "fig-N-fixed-power") {
    // Pin the budget at the reference point's total so doubling the
    // subchannels halves the power available to each.
    spec.base.x_con = 320.0;
    spec.sweep = SweepSpec{"subchannels", {8, 16, 32, 64}};
  } else if (name == "fig-K") {
    spec.sweep = SweepSpec{"users", {2, 4, 8, 16}};
  } else if (name == "fig-SNR") {
    spec.sweep = SweepSpec{"snr_db", {0, 5, 10, 15, 20}};
  } else {
    std::string msg = "unknown preset '" + name + "'; available:";
    for (const auto& n : preset_names()) msg += " " + n;
    throw std::invalid_argument(msg);
  }
  return spec;
}

}  // namespace arqsched
