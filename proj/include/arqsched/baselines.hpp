#pragma once
// Reference schedulers the tracked-posterior allocator is compared against:
// a causal genie that samples the delayed-channel transition off the true
// lagged taps, a non-causal genie that knows the current gains exactly, and a
// blind fixed-power random-user baseline.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "arqsched/channel.hpp"
#include "arqsched/posterior.hpp"
#include "arqsched/rng.hpp"
#include "arqsched/solver.hpp"

namespace arqsched {

// Causal genie posterior for one user: particles drawn from the recursion
// composed over the feedback delay, seeded at the true lagged taps, with
// uniform weights. This is exact knowledge of everything a delayed feedback
// link could reveal, sampled instead of tracked.
inline SsgPosterior genie_posterior(const ChannelParams& p, const SsgMap& map,
                                    const std::complex<double>* lagged_taps, int particles,
                                    Rng& rng) {
  if (particles < 1) throw std::invalid_argument("genie: need particles >= 1");
  double decay = p.lag_decay(p.delay);
  double var = p.lag_innovation_var(p.delay);
  std::vector<std::complex<double>> taps(static_cast<std::size_t>(particles) * p.num_taps);
  for (int s = 0; s < particles; ++s)
    for (int l = 0; l < p.num_taps; ++l)
      taps[static_cast<std::size_t>(s) * p.num_taps + l] =
          decay * lagged_taps[l] + rng.cnormal(var);
  std::vector<double> w(static_cast<std::size_t>(particles), 1.0 / particles);
  return SsgPosterior::from_particles(map, taps, w);
}

// Causal genie allocation: genie posteriors for every user off the true
// lagged state, then the same priced allocator.
inline AllocResult cgg_allocate(const ChannelState& lagged_state, const ChannelParams& p,
                                const SsgMap& map, const McsTable& table,
                                const UtilitySpec& u, const SolverConfig& cfg, int particles,
                                std::span<Rng> user_rngs) {
  std::vector<SsgPosterior> posts;
  posts.reserve(static_cast<std::size_t>(p.num_users));
  for (int k = 0; k < p.num_users; ++k)
    posts.push_back(genie_posterior(
        p, map, &lagged_state.taps[static_cast<std::size_t>(k) * p.num_taps], particles,
        user_rngs[static_cast<std::size_t>(k)]));
  return greedy_allocate(posts, table, u, cfg);
}

// Non-causal genie allocation: point-mass posteriors at the true current
// gains. Deterministic given the state.
inline AllocResult ncgg_allocate(const std::vector<double>& true_gains, int num_users,
                                 int num_subchannels, const McsTable& table,
                                 const UtilitySpec& u, const SolverConfig& cfg) {
  std::vector<SsgPosterior> posts;
  posts.reserve(static_cast<std::size_t>(num_users));
  for (int k = 0; k < num_users; ++k)
    posts.push_back(SsgPosterior::point_mass(std::span<const double>(
        &true_gains[static_cast<std::size_t>(k) * num_subchannels],
        static_cast<std::size_t>(num_subchannels))));
  return greedy_allocate(posts, table, u, cfg);
}

// Best fixed entry under a unit-mean exponential gain prior at the given
// power: E{exp(-bPg)} = 1 / (1 + bP), so the prior-expected goodput is
// r (1 - a / (1 + bP)). Lowest index wins ties.
inline int fprus_best_mcs(const McsTable& table, double power) {
  double best = -std::numeric_limits<double>::infinity();
  int best_m = 0;
  for (int m = 0; m < table.size(); ++m) {
    const McsEntry& e = table[m];
    double val = e.r * (1.0 - e.a / (1.0 + e.b * power));
    if (val > best) {
      best = val;
      best_m = m;
    }
  }
  return best_m;
}

// Blind baseline: power split evenly across subchannels, one prior-optimal
// entry everywhere, users drawn uniformly at random per subchannel.
inline Schedule fprus_allocate(int num_subchannels, int num_users, const McsTable& table,
                               double budget, Rng& rng) {
  if (num_subchannels < 1 || num_users < 1)
    throw std::invalid_argument("fprus: need subchannels >= 1 and users >= 1");
  double power = budget / num_subchannels;
  int m = fprus_best_mcs(table, power);
  Schedule s(num_subchannels);
  for (int n = 0; n < num_subchannels; ++n)
    s.entries[static_cast<std::size_t>(n)] =
        Assignment{static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(num_users))),
                   m, power};
  return s;
}

}  // namespace arqsched
