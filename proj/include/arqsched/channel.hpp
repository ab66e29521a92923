#pragma once
// Wideband block-fading downlink. Each user's tap vector follows a
// first-order Gauss-Markov recursion; subchannel gains are DFT samples of the
// taps, scaled so the mean subchannel gain is exactly one. Packet outcomes
// are Bernoulli draws against the current gains.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "arqsched/mcs.hpp"
#include "arqsched/rng.hpp"
#include "arqsched/schedule.hpp"

namespace arqsched {

struct ChannelParams {
  int num_subchannels = 32;  // N
  int num_users = 8;         // K
  int num_taps = 2;          // L, <= N
  double alpha = 1e-3;       // innovation rate, in (0, 1]
  int delay = 1;             // feedback delay in slots, >= 1

  void validate() const {
    if (num_subchannels < 1) throw std::invalid_argument("channel: need subchannels >= 1");
    if (num_users < 1) throw std::invalid_argument("channel: need users >= 1");
    if (num_taps < 1 || num_taps > num_subchannels)
      throw std::invalid_argument("channel: need 1 <= taps <= subchannels");
    if (!(alpha > 0.0) || !(alpha <= 1.0))
      throw std::invalid_argument("channel: need alpha in (0, 1]");
    if (delay < 1) throw std::invalid_argument("channel: need delay >= 1");
  }

  // Per-tap stationary variance of h <- (1-alpha) h + alpha w, w ~ CN(0,1).
  double stationary_var() const { return alpha / (2.0 - alpha); }

  // Gain scale making E{|H_n|^2} = 1 under the stationary tap distribution.
  double beta() const {
    return (static_cast<double>(num_subchannels) / num_taps) * (2.0 - alpha) / alpha;
  }

  // Mean decay and innovation variance of the recursion composed over steps.
  double lag_decay(int steps) const { return std::pow(1.0 - alpha, steps); }
  double lag_innovation_var(int steps) const {
    double s = (1.0 - alpha) * (1.0 - alpha);
    if (s == 1.0) return alpha * alpha * steps;  // unreachable for alpha > 0, kept for safety
    return alpha * alpha * (1.0 - std::pow(s, steps)) / (1.0 - s);
  }
};

struct ChannelState {
  int slot = 0;
  std::vector<std::complex<double>> taps;  // [k * L + l]
};

// Stationary start: every tap CN(0, alpha / (2 - alpha)).
inline ChannelState init_state(const ChannelParams& p, std::span<Rng> user_rngs) {
  ChannelState st;
  st.slot = 0;
  st.taps.resize(static_cast<std::size_t>(p.num_users) * p.num_taps);
  double var = p.stationary_var();
  for (int k = 0; k < p.num_users; ++k)
    for (int l = 0; l < p.num_taps; ++l)
      st.taps[static_cast<std::size_t>(k) * p.num_taps + l] = user_rngs[k].cnormal(var);
  return st;
}

// Advances the recursion `steps` times. Draw order is (step, user, tap).
inline void step_state(ChannelState& st, const ChannelParams& p,
                       std::span<Rng> user_rngs, int steps = 1) {
  if (steps < 1) throw std::invalid_argument("channel: need steps >= 1");
  double keep = 1.0 - p.alpha;
  for (int s = 0; s < steps; ++s)
    for (int k = 0; k < p.num_users; ++k)
      for (int l = 0; l < p.num_taps; ++l) {
        auto& h = st.taps[static_cast<std::size_t>(k) * p.num_taps + l];
        h = keep * h + p.alpha * user_rngs[k].cnormal(1.0);
      }
  st.slot += steps;
}

// Precomputed sqrt(beta) * F where F holds the first L columns of the unitary
// N-point DFT. Maps a tap vector to its per-subchannel gains.
class SsgMap {
 public:
  explicit SsgMap(const ChannelParams& p)
      : n_(p.num_subchannels), l_(p.num_taps), w_(static_cast<std::size_t>(n_) * l_) {
    double scale = std::sqrt(p.beta() / n_);
    for (int n = 0; n < n_; ++n)
      for (int l = 0; l < l_; ++l) {
        double phase = -2.0 * std::numbers::pi * n * l / n_;
        w_[static_cast<std::size_t>(n) * l_ + l] =
            scale * std::complex<double>(std::cos(phase), std::sin(phase));
      }
  }

  int num_subchannels() const { return n_; }
  int num_taps() const { return l_; }

  double ssg(const std::complex<double>* taps, int n) const {
    const std::complex<double>* row = &w_[static_cast<std::size_t>(n) * l_];
    std::complex<double> acc{0.0, 0.0};
    for (int l = 0; l < l_; ++l) acc += row[l] * taps[l];
    return std::norm(acc);
  }

  void user_gains(const std::complex<double>* taps, double* out) const {
    for (int n = 0; n < n_; ++n) out[n] = ssg(taps, n);
  }

 private:
  int n_, l_;
  std::vector<std::complex<double>> w_;
};

// All subchannel gains of a state, [k * N + n].
inline std::vector<double> subchannel_gains(const ChannelState& st, const ChannelParams& p,
                                            const SsgMap& map) {
  std::vector<double> g(static_cast<std::size_t>(p.num_users) * p.num_subchannels);
  for (int k = 0; k < p.num_users; ++k)
    map.user_gains(&st.taps[static_cast<std::size_t>(k) * p.num_taps],
                   &g[static_cast<std::size_t>(k) * p.num_subchannels]);
  return g;
}

enum class Ack : unsigned char { not_scheduled = 0, ack = 1, nak = 2 };

struct FeedbackFrame {
  int slot = 0;
  int num_subchannels = 0;
  int num_users = 0;
  std::vector<Ack> entries;  // [k * N + n], not_scheduled unless assigned

  Ack at(int n, int k) const {
    return entries[static_cast<std::size_t>(k) * num_subchannels + n];
  }
};

// Bernoulli packet outcomes against the true gains. One draw per assigned
// subchannel, in ascending subchannel order.
inline FeedbackFrame gen_feedback(const std::vector<double>& gains, int num_users,
                                  const Schedule& sched, const McsTable& table, int slot,
                                  Rng& rng) {
  FeedbackFrame f;
  f.slot = slot;
  f.num_subchannels = sched.num_subchannels();
  f.num_users = num_users;
  f.entries.assign(static_cast<std::size_t>(num_users) * f.num_subchannels,
                   Ack::not_scheduled);
  for (int n = 0; n < f.num_subchannels; ++n) {
    const auto& e = sched.entries[static_cast<std::size_t>(n)];
    if (!e) continue;
    double g = gains[static_cast<std::size_t>(e->user) * f.num_subchannels + n];
    double eps = error_rate(table[e->mcs], e->power, g);
    f.entries[static_cast<std::size_t>(e->user) * f.num_subchannels + n] =
        (rng.uniform() < eps) ? Ack::nak : Ack::ack;
  }
  return f;
}

}  // namespace arqsched
