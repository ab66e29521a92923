#pragma once
// Discrete per-user posterior over subchannel gains: weighted support points,
// one gain row per subchannel. This is the only channel knowledge the
// allocator ever sees; particle trackers, genie samplers, and point-mass
// oracles all reduce to it.

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "arqsched/channel.hpp"

namespace arqsched {

struct SsgPosterior {
  int num_subchannels = 0;
  int support = 0;                 // number of weighted points
  std::vector<double> weights;     // [support], sums to 1
  std::vector<double> gammas;      // [n * support + i]
  std::vector<double> mean_gamma;  // [n], first moment per subchannel

  double gamma(int n, int i) const {
    return gammas[static_cast<std::size_t>(n) * support + i];
  }

  template <class F>
  double expect(int n, F&& f) const {
    const double* g = &gammas[static_cast<std::size_t>(n) * support];
    double acc = 0.0;
    for (int i = 0; i < support; ++i) acc += weights[static_cast<std::size_t>(i)] * f(g[i]);
    return acc;
  }

  // Validates shapes and caches first moments.
  void finalize() {
    if (num_subchannels < 1 || support < 1)
      throw std::invalid_argument("posterior: empty support");
    if (static_cast<int>(weights.size()) != support ||
        static_cast<int>(gammas.size()) != num_subchannels * support)
      throw std::invalid_argument("posterior: inconsistent shapes");
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw std::invalid_argument("posterior: weights must be nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("posterior: weights must sum to 1");
    for (double g : gammas)
      if (!(g >= 0.0) || !std::isfinite(g))
        throw std::invalid_argument("posterior: gains must be nonnegative and finite");
    mean_gamma.assign(static_cast<std::size_t>(num_subchannels), 0.0);
    for (int n = 0; n < num_subchannels; ++n)
      mean_gamma[static_cast<std::size_t>(n)] = expect(n, [](double g) { return g; });
  }

  // Certain knowledge of one gain per subchannel.
  static SsgPosterior point_mass(std::span<const double> gain_by_subchannel) {
    SsgPosterior p;
    p.num_subchannels = static_cast<int>(gain_by_subchannel.size());
    p.support = 1;
    p.weights = {1.0};
    p.gammas.assign(gain_by_subchannel.begin(), gain_by_subchannel.end());
    p.finalize();
    return p;
  }

  // Projects weighted tap-vector particles through the gain map.
  static SsgPosterior from_particles(const SsgMap& map,
                                     std::span<const std::complex<double>> taps,
                                     std::span<const double> weights) {
    SsgPosterior p;
    p.num_subchannels = map.num_subchannels();
    p.support = static_cast<int>(weights.size());
    p.weights.assign(weights.begin(), weights.end());
    p.gammas.resize(static_cast<std::size_t>(p.num_subchannels) * p.support);
    int L = map.num_taps();
    for (int i = 0; i < p.support; ++i) {
      const std::complex<double>* h = &taps[static_cast<std::size_t>(i) * L];
      for (int n = 0; n < p.num_subchannels; ++n)
        p.gammas[static_cast<std::size_t>(n) * p.support + i] = map.ssg(h, n);
    }
    p.finalize();
    return p;
  }
};

}  // namespace arqsched
