#pragma once
// Delayed-feedback particle filter over one user's tap vector. Two particle
// sets are kept: the lagged set that ACK/NAK evidence applies to, and the
// current set the scheduler reads. Weight updates run in the log domain with
// max subtraction; a fully degenerate update resets to uniform and is
// counted. No resampling by default; a systematic-resampling switch exists.

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

namespace arqsched {

struct Belief {
  int num_taps = 0;
  int support = 0;  // particle count S
  int delay = 1;
  double alpha = 0.0;
  std::vector<std::complex<double>> lagged;    // [i * L + l], particles at t - d
  std::vector<std::complex<double>> current;   // [i * L + l], particles at t
  std::vector<double> weights_lagged;          // evidence-bearing chain weights
  std::vector<double> weights_current;         // scheduling weights at t
  long degenerate_resets = 0;                  // all-zero likelihood events
};

// Stationary prior start; both particle sets coincide and weights are uniform.
inline Belief init_belief(const ChannelParams& p, int support, Rng& rng) {
  if (support < 1) throw std::invalid_argument("belief: need support >= 1");
  Belief b;
  b.num_taps = p.num_taps;
  b.support = support;
  b.delay = p.delay;
  b.alpha = p.alpha;
  b.lagged.resize(static_cast<std::size_t>(support) * p.num_taps);
  double var = p.stationary_var();
  for (auto& h : b.lagged) h = rng.cnormal(var);
  b.current = b.lagged;
  b.weights_lagged.assign(static_cast<std::size_t>(support), 1.0 / support);
  b.weights_current = b.weights_lagged;
  return b;
}

// Pre-feedback slots of a delayed loop (delay > 1 only): the scheduler keeps
// drawing fresh prior particles while the lagged set waits for its first
// evidence.
inline void refresh_prior(Belief& b, const ChannelParams& p, Rng& rng) {
  double var = p.stationary_var();
  for (auto& h : b.current) h = rng.cnormal(var);
  b.weights_current.assign(static_cast<std::size_t>(b.support), 1.0 / b.support);
}

// Draws the current set from the lagged one through the recursion composed
// over the feedback delay. Draw order is (particle, tap).
inline void propagate(Belief& b, const ChannelParams& p, Rng& rng) {
  double decay = p.lag_decay(b.delay);
  double var = p.lag_innovation_var(b.delay);
  for (std::size_t i = 0; i < b.lagged.size(); ++i)
    b.current[i] = decay * b.lagged[i] + rng.cnormal(var);
}

// Log-likelihood of one user's ACK/NAK row under one particle's tap vector.
// Subchannels the user was not assigned contribute nothing.
inline double log_feedback_likelihood(const std::complex<double>* taps, const SsgMap& map,
                                      const McsTable& table, const FeedbackFrame& frame,
                                      const Schedule& sched, int user) {
  double acc = 0.0;
  for (int n = 0; n < sched.num_subchannels(); ++n) {
    const auto& e = sched.entries[static_cast<std::size_t>(n)];
    if (!e || e->user != user) continue;
    double eps = error_rate(table[e->mcs], e->power, map.ssg(taps, n));
    double term = (frame.at(n, user) == Ack::nak) ? eps : 1.0 - eps;
    acc += std::log(term);  // -inf for an impossible particle is intended
  }
  return acc;
}

// Multiplies the lagged chain weights by the evidence for the slot the frame
// reports on, then normalizes. An all-zero update resets to uniform.
inline void update_weights(Belief& b, const SsgMap& map, const McsTable& table,
                           const FeedbackFrame& frame, const Schedule& sched, int user) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> logw(static_cast<std::size_t>(b.support));
  double max_logw = neg_inf;
  for (int i = 0; i < b.support; ++i) {
    double prior = b.weights_lagged[static_cast<std::size_t>(i)];
    double lw = (prior > 0.0)
                    ? std::log(prior) + log_feedback_likelihood(
                                            &b.lagged[static_cast<std::size_t>(i) * b.num_taps],
                                            map, table, frame, sched, user)
                    : neg_inf;
    logw[static_cast<std::size_t>(i)] = lw;
    if (lw > max_logw) max_logw = lw;
  }
  if (max_logw == neg_inf) {
    b.weights_lagged.assign(static_cast<std::size_t>(b.support), 1.0 / b.support);
    ++b.degenerate_resets;
    return;
  }
  double sum = 0.0;
  for (int i = 0; i < b.support; ++i) {
    double w = std::exp(logw[static_cast<std::size_t>(i)] - max_logw);
    b.weights_lagged[static_cast<std::size_t>(i)] = w;
    sum += w;
  }
  for (auto& w : b.weights_lagged) w /= sum;
}

// Scheduling weights of the current set. Each current particle was drawn
// from the equal-weight mixture of composed transitions, so its importance
// weight for the evidence-updated target is the ratio of the two mixture
// densities: sum_j w_j K(c_i | l_j) over sum_j (1/S) K(c_i | l_j). Skipping
// the denominator would square the prior through the proposal density and
// bias the posterior toward it.
inline void reweight_current(Belief& b, const ChannelParams& p) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  double decay = p.lag_decay(b.delay);
  double var = p.lag_innovation_var(b.delay);
  int L = b.num_taps;
  std::vector<double> log_prior(static_cast<std::size_t>(b.support));
  for (int j = 0; j < b.support; ++j) {
    double w = b.weights_lagged[static_cast<std::size_t>(j)];
    log_prior[static_cast<std::size_t>(j)] = (w > 0.0) ? std::log(w) : neg_inf;
  }
  std::vector<double> logv(static_cast<std::size_t>(b.support));
  double max_logv = neg_inf;
  std::vector<double> kernel(static_cast<std::size_t>(b.support));
  for (int i = 0; i < b.support; ++i) {
    const std::complex<double>* hi = &b.current[static_cast<std::size_t>(i) * L];
    double best_k = neg_inf;
    for (int j = 0; j < b.support; ++j) {
      const std::complex<double>* hj = &b.lagged[static_cast<std::size_t>(j) * L];
      double dist2 = 0.0;
      for (int l = 0; l < L; ++l) dist2 += std::norm(hi[l] - decay * hj[l]);
      double k = -dist2 / var;
      kernel[static_cast<std::size_t>(j)] = k;
      if (k > best_k) best_k = k;
    }
    double num = 0.0, den = 0.0;
    for (int j = 0; j < b.support; ++j) {
      double k = std::exp(kernel[static_cast<std::size_t>(j)] - best_k);
      den += k;
      if (log_prior[static_cast<std::size_t>(j)] != neg_inf)
        num += k * b.weights_lagged[static_cast<std::size_t>(j)];
    }
    // The best_k shift and the 1/S factor cancel in the ratio and the final
    // normalization respectively; den > 0 always holds (the j = i term is
    // within exp range of the maximum only by chance, but some term is 1).
    logv[static_cast<std::size_t>(i)] = (num > 0.0) ? std::log(num / den) : neg_inf;
    if (logv[static_cast<std::size_t>(i)] > max_logv) max_logv = logv[static_cast<std::size_t>(i)];
  }
  if (max_logv == neg_inf) {  // every current particle lost kernel contact
    b.weights_current.assign(static_cast<std::size_t>(b.support), 1.0 / b.support);
    ++b.degenerate_resets;
    return;
  }
  double sum = 0.0;
  for (int i = 0; i < b.support; ++i) {
    double v = std::exp(logv[static_cast<std::size_t>(i)] - max_logv);
    b.weights_current[static_cast<std::size_t>(i)] = v;
    sum += v;
  }
  for (auto& v : b.weights_current) v /= sum;
}

// Moves the lagged chain one slot forward. With unit delay the freshly
// propagated current set is that step, so it is adopted as-is; with a longer
// delay the lagged set takes its own single recursion step.
inline void advance_lag(Belief& b, const ChannelParams& p, Rng& rng) {
  if (b.delay == 1) {
    b.lagged = b.current;
    return;
  }
  double keep = 1.0 - p.alpha;
  for (auto& h : b.lagged) h = keep * h + p.alpha * rng.cnormal(1.0);
}

// Resamples the lagged chain with systematic strata; weights become uniform.
inline void systematic_resample(Belief& b, Rng& rng) {
  int S = b.support;
  int L = b.num_taps;
  double step = 1.0 / S;
  double u = rng.uniform() * step;
  std::vector<std::complex<double>> next(b.lagged.size());
  double cum = b.weights_lagged[0];
  int j = 0;
  for (int i = 0; i < S; ++i) {
    double target = u + i * step;
    while (cum < target && j + 1 < S) cum += b.weights_lagged[static_cast<std::size_t>(++j)];
    for (int l = 0; l < L; ++l)
      next[static_cast<std::size_t>(i) * L + l] = b.lagged[static_cast<std::size_t>(j) * L + l];
  }
  b.lagged = std::move(next);
  b.weights_lagged.assign(static_cast<std::size_t>(S), step);
}

// One full update: propagate, absorb the delayed frame into the lagged chain,
// reweight the current set, then advance the chain one slot.
inline void absorb_feedback(Belief& b, const ChannelParams& p, const SsgMap& map,
                            const McsTable& table, const FeedbackFrame& frame,
                            const Schedule& sched, int user, Rng& rng,
                            bool resample = false) {
  if (resample) systematic_resample(b, rng);
  propagate(b, p, rng);
  update_weights(b, map, table, frame, sched, user);
  reweight_current(b, p);
  advance_lag(b, p, rng);
}

// Posterior expectation of f(gain) on one subchannel under the current set.
template <class F>
double expect_ssg_fn(const Belief& b, const SsgMap& map, int n, F&& f) {
  double acc = 0.0;
  for (int i = 0; i < b.support; ++i)
    acc += b.weights_current[static_cast<std::size_t>(i)] *
           f(map.ssg(&b.current[static_cast<std::size_t>(i) * b.num_taps], n));
  return acc;
}

inline SsgPosterior belief_posterior(const Belief& b, const SsgMap& map) {
  return SsgPosterior::from_particles(map, b.current, b.weights_current);
}

}  // namespace arqsched
