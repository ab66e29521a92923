#pragma once
// Sum-power-constrained user/mcs/power allocation over subchannels.
//
// greedy_allocate prices power with a dual multiplier, bisects the multiplier
// until the priced allocation brackets the budget, projects each subchannel
// onto its best single candidate, then completes both bracket endpoints with
// budget-exact powers and keeps the better one. It also returns a certificate
// bounding the utility lost to the projection. brute_force_allocate
// enumerates every admissible assignment pattern and serves as the oracle on
// small instances.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "arqsched/mcs.hpp"
#include "arqsched/posterior.hpp"
#include "arqsched/schedule.hpp"
#include "arqsched/utility.hpp"

namespace arqsched {

struct SolverConfig {
  double budget = 0.0;      // total power constraint, > 0
  double kappa_rel = 1e-4;  // dual bisection tolerance, relative to the upper multiplier bound
  double root_tol = 1e-9;   // relative tolerance of each stationary-power root
  int max_outer = 64;       // hard cap on bisection iterations
  int enum_cap = 5000;      // brute-force pattern-count cap

  void validate() const {
    if (!(budget > 0.0) || !std::isfinite(budget))
      throw std::invalid_argument("solver: need budget > 0");
    if (!(kappa_rel > 0.0)) throw std::invalid_argument("solver: need kappa_rel > 0");
    if (!(root_tol > 0.0)) throw std::invalid_argument("solver: need root_tol > 0");
    if (max_outer < 1) throw std::invalid_argument("solver: need max_outer >= 1");
    if (enum_cap < 1) throw std::invalid_argument("solver: need enum_cap >= 1");
  }
};

// Upper bound on the utility lost by projecting each subchannel onto a single
// candidate. The degenerate flag records that the priced allocation had an
// effectively unique winner everywhere at both bracket endpoints, in which
// case the projection is lossless and the bound is exactly zero.
struct GapCertificate {
  double mu_low = 0.0;
  double mu_high = 0.0;
  double bound = 0.0;
  bool degenerate = false;
};

struct SolveStats {
  long power_evals = 0;  // stationary-power evaluations, threshold shortcuts included
  int outer_iters = 0;   // dual bisection iterations
  int completions = 0;   // endpoint power completions run
};

struct AllocResult {
  Schedule schedule{0};
  double expected_utility = 0.0;  // posterior-expected utility of the returned schedule
  GapCertificate gap;
  SolveStats stats;
};

struct MuBounds {
  double mu_min = 0.0;
  double mu_max = 0.0;
};

namespace detail {

struct Entry {
  int n = 0, k = 0, m = 0;
};

// Derivative of the priced objective at zero power, divided by E{gain}:
// a * b * r * U'((1 - a) * r).
inline double zero_power_slope(const McsEntry& e, const UtilitySpec& u, int user) {
  return e.a * e.b * e.r * u.prime(user, (1.0 - e.a) * e.r);
}

// E{ U'((1 - a e^{-bPg}) r) g e^{-bPg} } * a b r under one posterior row.
inline double priced_slope(const SsgPosterior& post, int n, const McsEntry& e,
                           const UtilitySpec& u, int user, double power) {
  const double* g = &post.gammas[static_cast<std::size_t>(n) * post.support];
  const double* w = post.weights.data();
  double acc = 0.0;
  for (int i = 0; i < post.support; ++i) {
    double eb = std::exp(-e.b * power * g[i]);
    acc += w[i] * u.prime(user, (1.0 - e.a * eb) * e.r) * g[i] * eb;
  }
  return e.a * e.b * e.r * acc;
}

}  // namespace detail

// Posterior-expected utility of transmitting one entry at the given power.
inline double expected_entry_utility(const SsgPosterior& post, int n, const McsEntry& e,
                                     const UtilitySpec& u, int user, double power) {
  if (power == 0.0) return u.value(user, (1.0 - e.a) * e.r);
  const double* g = &post.gammas[static_cast<std::size_t>(n) * post.support];
  const double* w = post.weights.data();
  double acc = 0.0;
  for (int i = 0; i < post.support; ++i) {
    double eb = std::exp(-e.b * power * g[i]);
    acc += w[i] * u.value(user, (1.0 - e.a * eb) * e.r);
  }
  return acc;
}

// Multiplier range that brackets every stationary power. The lower bound is
// the smallest priced slope at full budget over candidates that can carry
// power at all; pairs whose posterior gain is identically zero are excluded
// so the bound stays strictly positive.
inline MuBounds mu_bounds(const std::vector<SsgPosterior>& posts, const McsTable& table,
                          const UtilitySpec& u, double budget) {
  MuBounds mb;
  mb.mu_min = std::numeric_limits<double>::infinity();
  bool live = false;
  int K = static_cast<int>(posts.size());
  for (int k = 0; k < K; ++k) {
    const SsgPosterior& post = posts[static_cast<std::size_t>(k)];
    for (int n = 0; n < post.num_subchannels; ++n) {
      if (!(post.mean_gamma[static_cast<std::size_t>(n)] > 0.0)) continue;
      live = true;
      for (int m = 0; m < table.size(); ++m) {
        const McsEntry& e = table[m];
        double c0 = detail::zero_power_slope(e, u, k) * post.mean_gamma[static_cast<std::size_t>(n)];
        if (c0 > mb.mu_max) mb.mu_max = c0;
        double s = detail::priced_slope(post, n, e, u, k, budget);
        if (s < mb.mu_min) mb.mu_min = s;
      }
    }
  }
  if (!live || !(mb.mu_max > 0.0))
    throw std::runtime_error("allocator: channel dead, every posterior gain is zero");
  return mb;
}

// Stationary power of one candidate at multiplier mu: the unique root of
// priced_slope(P) = mu, or zero when the slope already starts below mu. The
// slope is strictly decreasing wherever the posterior has positive-gain
// support, so the root is bracketed by geometric doubling and polished with
// an Illinois false-position iteration, which bisection-safeguards itself.
inline double solve_power(double mu, const SsgPosterior& post, int n, const McsEntry& e,
                          const UtilitySpec& u, int user, double root_tol,
                          double power_scale, SolveStats& stats, double hint = -1.0) {
  ++stats.power_evals;
  double c0 = detail::zero_power_slope(e, u, user) *
              post.mean_gamma[static_cast<std::size_t>(n)];
  if (!(mu < c0)) return 0.0;
  // A non-positive multiplier prices power as free; the stationary point is
  // unbounded. Reachable only when the lower multiplier bound underflowed to
  // zero, so cap at the budget scale and let the completion interpolate.
  if (mu <= 0.0) return std::max(power_scale, 1.0);
  if (post.support == 1) {
    if (auto w = u.constant_prime(user)) {
      (void)w;
      // Single support point with a linear utility: the stationarity
      // condition inverts in closed form.
      double g = post.gamma(n, 0);
      return std::log(c0 / mu) / (e.b * g);
    }
  }
  double lo = 0.0, flo = c0 - mu;
  double hi = (hint > 0.0) ? hint : std::max(power_scale, 1.0);
  double fhi = detail::priced_slope(post, n, e, u, user, hi) - mu;
  int guard = 0;
  while (fhi >= 0.0) {
    lo = hi;
    flo = fhi;
    hi *= 2.0;
    fhi = detail::priced_slope(post, n, e, u, user, hi) - mu;
    if (++guard > 1100) throw std::runtime_error("allocator: power root bracket failed");
  }
  if (flo == 0.0) return lo;
  int side = 0;
  for (int it = 0; it < 256 && hi - lo > root_tol * std::max(1.0, hi); ++it) {
    double mid = (flo * hi - fhi * lo) / (flo - fhi);
    if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    double fm = detail::priced_slope(post, n, e, u, user, mid) - mu;
    if (fm > 0.0) {
      lo = mid;
      flo = fm;
      if (side == 1) fhi *= 0.5;
      side = 1;
    } else if (fm < 0.0) {
      hi = mid;
      fhi = fm;
      if (side == -1) flo *= 0.5;
      side = -1;
    } else {
      return mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Priced loss of one candidate: mu * P - E{ utility at P }. Scheduling is
// worthwhile only when this is non-positive.
inline double v_metric(double mu, double power, const SsgPosterior& post, int n,
                       const McsEntry& e, const UtilitySpec& u, int user) {
  return mu * power - expected_entry_utility(post, n, e, u, user, power);
}

struct WinnerRow {
  bool scheduled = false;
  int user = -1;
  int mcs = -1;
  double power = 0.0;
  double v = 0.0;
  int ties = 0;                   // candidates attaining the minimal priced loss
  bool tie_power_spread = false;  // tied candidates wanted different powers
};

struct Sweep {
  double mu = 0.0;
  double x_tot = 0.0;
  std::vector<WinnerRow> rows;
};

// Evaluates every candidate at multiplier mu and projects each subchannel
// onto its best one: minimal priced loss, then minimal power, then lowest
// (user, mcs) in iteration order. Ties are exact floating-point ties; they
// arise structurally when several candidates sit at zero power.
inline Sweep select_winners(double mu, const std::vector<SsgPosterior>& posts,
                            const McsTable& table, const UtilitySpec& u,
                            const SolverConfig& cfg, SolveStats& stats,
                            std::vector<double>* warm = nullptr) {
  int K = static_cast<int>(posts.size());
  int M = table.size();
  int N = posts[0].num_subchannels;
  Sweep sw;
  sw.mu = mu;
  sw.rows.resize(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) {
    WinnerRow best;
    for (int k = 0; k < K; ++k) {
      for (int m = 0; m < M; ++m) {
        double* slot =
            warm ? &(*warm)[(static_cast<std::size_t>(n) * K + k) * M + m] : nullptr;
        double p = solve_power(mu, posts[static_cast<std::size_t>(k)], n, table[m], u, k,
                               cfg.root_tol, cfg.budget, stats, slot ? *slot : -1.0);
        if (slot && p > 0.0) *slot = p;
        double v = v_metric(mu, p, posts[static_cast<std::size_t>(k)], n, table[m], u, k);
        if (best.ties == 0 || v < best.v) {
          best = WinnerRow{true, k, m, p, v, 1, false};
        } else if (v == best.v) {
          ++best.ties;
          if (p != best.power) best.tie_power_spread = true;
          if (p < best.power) {
            best.user = k;
            best.mcs = m;
            best.power = p;
          }
        }
      }
    }
    best.scheduled = best.v <= 0.0;
    sw.rows[static_cast<std::size_t>(n)] = best;
    if (best.scheduled) sw.x_tot += best.power;
  }
  return sw;
}

inline Schedule sweep_schedule(const Sweep& sw) {
  Schedule s(static_cast<int>(sw.rows.size()));
  for (std::size_t n = 0; n < sw.rows.size(); ++n) {
    const WinnerRow& r = sw.rows[n];
    if (r.scheduled) s.entries[n] = Assignment{r.user, r.mcs, r.power};
  }
  return s;
}

namespace detail {

inline std::vector<Entry> scheduled_entries(const Schedule& s) {
  std::vector<Entry> out;
  for (int n = 0; n < s.num_subchannels(); ++n) {
    const auto& e = s.entries[static_cast<std::size_t>(n)];
    if (e) out.push_back(Entry{n, e->user, e->mcs});
  }
  return out;
}

struct Completion {
  std::vector<double> powers;  // aligned with the entry list
  double mu_high = 0.0;
  double lambda = 0.0;
  double total_power = 0.0;
  double utility = 0.0;
  double lagrangian = 0.0;
};

// Budget-exact powers for a fixed assignment pattern: bisect the multiplier
// over the same bracket, then interpolate the endpoint powers so the total
// meets the budget exactly. An empty pattern scores zero by convention (its
// true optimum; the priced form is ill-defined for it).
inline Completion complete_powers(const std::vector<Entry>& entries,
                                  const std::vector<SsgPosterior>& posts,
                                  const McsTable& table, const UtilitySpec& u,
                                  const SolverConfig& cfg, const MuBounds& mb, int iters,
                                  SolveStats& stats) {
  Completion c;
  std::size_t count = entries.size();
  c.powers.assign(count, 0.0);
  c.mu_high = mb.mu_max;
  if (count == 0) return c;

  // Warm hints chain across the multiplier evaluations below. They start
  // empty so the completion of a pattern is a pure function of its arguments;
  // the exhaustive oracle and the greedy path must complete identical
  // patterns bit-identically.
  std::vector<double> hints(count, -1.0);
  std::vector<double> p_lo(count), p_hi(count), p_mid(count);
  auto eval = [&](double mu, std::vector<double>& p) {
    double x = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const Entry& e = entries[i];
      p[i] = solve_power(mu, posts[static_cast<std::size_t>(e.k)], e.n, table[e.m], u, e.k,
                         cfg.root_tol, cfg.budget, stats, hints[i]);
      if (p[i] > 0.0) hints[i] = p[i];
      x += p[i];
    }
    return x;
  };
  double lo = mb.mu_min, hi = mb.mu_max;
  double x_lo = eval(lo, p_lo);
  double x_hi = eval(hi, p_hi);
  for (int it = 0; it < iters; ++it) {
    double mu = 0.5 * (lo + hi);
    double x = eval(mu, p_mid);
    if (x > cfg.budget) {
      lo = mu;
      x_lo = x;
      p_lo = p_mid;
    } else {
      hi = mu;
      x_hi = x;
      p_hi = p_mid;
    }
  }
  double denom = x_lo - x_hi;
  double lambda = (denom != 0.0) ? (x_lo - cfg.budget) / denom : 0.0;
  if (lambda < 0.0) lambda = 0.0;
  if (lambda > 1.0) lambda = 1.0;
  c.lambda = lambda;
  c.mu_high = hi;
  for (std::size_t i = 0; i < count; ++i) {
    c.powers[i] = lambda * p_hi[i] + (1.0 - lambda) * p_lo[i];
    c.total_power += c.powers[i];
  }
  for (std::size_t i = 0; i < count; ++i) {
    const Entry& e = entries[i];
    c.utility += expected_entry_utility(posts[static_cast<std::size_t>(e.k)], e.n, table[e.m],
                                        u, e.k, c.powers[i]);
  }
  c.lagrangian = (c.total_power - cfg.budget) * c.mu_high - c.utility;
  return c;
}

inline Schedule entries_to_schedule(int num_subchannels, const std::vector<Entry>& entries,
                                    const std::vector<double>& powers) {
  Schedule s(num_subchannels);
  for (std::size_t i = 0; i < entries.size(); ++i)
    s.entries[static_cast<std::size_t>(entries[i].n)] =
        Assignment{entries[i].k, entries[i].m, powers[i]};
  return s;
}

// A projection is lossless on a subchannel when the winner is unique or all
// tied winners want the same power.
inline bool lossless_rows(const Sweep& sw) {
  for (const WinnerRow& r : sw.rows)
    if (r.scheduled && r.ties > 1 && r.tie_power_spread) return false;
  return true;
}

inline int bisection_iters(const MuBounds& mb, const SolverConfig& cfg) {
  double kappa = cfg.kappa_rel * mb.mu_max;
  double width = mb.mu_max - mb.mu_min;
  if (!(width > kappa)) return 0;
  int iters = static_cast<int>(std::ceil(std::log2(width / kappa)));
  return std::min(std::max(iters, 0), cfg.max_outer);
}

inline void validate_problem(const std::vector<SsgPosterior>& posts, const McsTable& table,
                             const UtilitySpec& u) {
  if (posts.empty()) throw std::invalid_argument("allocator: need at least one user");
  int N = posts[0].num_subchannels;
  for (const auto& p : posts)
    if (p.num_subchannels != N)
      throw std::invalid_argument("allocator: posteriors disagree on subchannel count");
  u.validate(static_cast<int>(posts.size()), table);
}

}  // namespace detail

inline AllocResult greedy_allocate(const std::vector<SsgPosterior>& posts,
                                   const McsTable& table, const UtilitySpec& u,
                                   const SolverConfig& cfg) {
  cfg.validate();
  detail::validate_problem(posts, table, u);
  MuBounds mb = mu_bounds(posts, table, u, cfg.budget);
  int iters = detail::bisection_iters(mb, cfg);

  AllocResult res;
  res.stats.outer_iters = iters;
  std::vector<double> warm(static_cast<std::size_t>(posts[0].num_subchannels) *
                               posts.size() * table.size(),
                           -1.0);
  double lo = mb.mu_min, hi = mb.mu_max;
  for (int it = 0; it < iters; ++it) {
    double mu = 0.5 * (lo + hi);
    Sweep sw = select_winners(mu, posts, table, u, cfg, res.stats, &warm);
    if (sw.x_tot > cfg.budget)
      lo = mu;
    else
      hi = mu;
  }
  Sweep sw_lo = select_winners(lo, posts, table, u, cfg, res.stats, &warm);
  Sweep sw_hi = select_winners(hi, posts, table, u, cfg, res.stats, &warm);
  Schedule sched_lo = sweep_schedule(sw_lo);
  Schedule sched_hi = sweep_schedule(sw_hi);
  auto entries_lo = detail::scheduled_entries(sched_lo);
  auto entries_hi = detail::scheduled_entries(sched_hi);
  bool same_pattern = sched_lo.same_assignments(sched_hi);

  detail::Completion comp_lo =
      detail::complete_powers(entries_lo, posts, table, u, cfg, mb, iters, res.stats);
  res.stats.completions = 1;
  detail::Completion comp_hi = comp_lo;
  if (!same_pattern) {
    comp_hi = detail::complete_powers(entries_hi, posts, table, u, cfg, mb, iters, res.stats);
    res.stats.completions = 2;
  }

  bool use_hi = comp_hi.lagrangian < comp_lo.lagrangian;
  const auto& entries = use_hi ? entries_hi : entries_lo;
  const auto& comp = use_hi ? comp_hi : comp_lo;
  res.schedule = detail::entries_to_schedule(posts[0].num_subchannels, entries, comp.powers);
  res.expected_utility = comp.utility;

  bool degenerate =
      same_pattern && detail::lossless_rows(sw_lo) && detail::lossless_rows(sw_hi);
  double bound = 0.0;
  if (!degenerate) {
    // Weak duality: every feasible schedule's utility is at most the dual
    // value D(mu) = mu * budget - sum of priced losses of the relaxed
    // winners, at any multiplier. Both endpoint sweeps are in hand, so the
    // tighter of their dual values certifies the returned schedule.
    auto dual_value = [&](const Sweep& sw) {
      double v_sum = 0.0;
      for (const WinnerRow& row : sw.rows)
        if (row.scheduled) v_sum += row.v;
      return sw.mu * cfg.budget - v_sum;
    };
    bound = std::max(0.0, std::min(dual_value(sw_lo), dual_value(sw_hi)) -
                              res.expected_utility);
  }
  res.gap = GapCertificate{lo, hi, bound, degenerate};
  return res;
}

// Exhaustive oracle: every assignment pattern (idle or one (user, mcs) pair
// per subchannel) is completed with budget-exact powers; the pattern with the
// highest posterior-expected utility wins, earliest pattern on ties. The
// pattern count (K*M+1)^N is capped.
inline AllocResult brute_force_allocate(const std::vector<SsgPosterior>& posts,
                                        const McsTable& table, const UtilitySpec& u,
                                        const SolverConfig& cfg) {
  cfg.validate();
  detail::validate_problem(posts, table, u);
  int K = static_cast<int>(posts.size());
  int M = table.size();
  int N = posts[0].num_subchannels;
  long long combos = 1;
  for (int n = 0; n < N; ++n) {
    combos *= K * M + 1;
    if (combos > cfg.enum_cap)
      throw std::invalid_argument(
          "brute force: pattern count (K*M+1)^N exceeds the cap of " +
          std::to_string(cfg.enum_cap) + "; use greedy_allocate for this instance");
  }
  MuBounds mb = mu_bounds(posts, table, u, cfg.budget);
  int iters = detail::bisection_iters(mb, cfg);

  AllocResult best;
  best.schedule = Schedule(N);
  best.expected_utility = 0.0;  // empty pattern, first in enumeration order
  best.stats.outer_iters = iters;

  std::vector<int> digit(static_cast<std::size_t>(N), 0);
  std::vector<detail::Entry> entries;
  for (long long c = 1; c < combos; ++c) {
    int pos = 0;
    while (true) {
      digit[static_cast<std::size_t>(pos)]++;
      if (digit[static_cast<std::size_t>(pos)] <= K * M) break;
      digit[static_cast<std::size_t>(pos)] = 0;
      ++pos;
    }
    entries.clear();
    for (int n = 0; n < N; ++n) {
      int d = digit[static_cast<std::size_t>(n)];
      if (d > 0) entries.push_back(detail::Entry{n, (d - 1) / M, (d - 1) % M});
    }
    detail::Completion comp =
        detail::complete_powers(entries, posts, table, u, cfg, mb, iters, best.stats);
    ++best.stats.completions;
    if (comp.utility > best.expected_utility) {
      best.expected_utility = comp.utility;
      best.schedule = detail::entries_to_schedule(N, entries, comp.powers);
    }
  }
  return best;
}

}  // namespace arqsched
