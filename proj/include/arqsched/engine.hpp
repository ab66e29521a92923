#pragma once
// Closed-loop simulation: one shared channel trajectory per realization, all
// requested schedulers run against it in parallel slots, and only the tracked
// scheme feeds its packet outcomes back into its own belief. Every stochastic
// component draws from its own purpose-keyed stream, so the set of schemes
// requested never perturbs any other scheme's draws.

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "arqsched/baselines.hpp"
#include "arqsched/belief.hpp"
#include "arqsched/channel.hpp"
#include "arqsched/mcs.hpp"
#include "arqsched/posterior.hpp"
#include "arqsched/rng.hpp"
#include "arqsched/solver.hpp"
#include "arqsched/utility.hpp"

namespace arqsched {

enum class Scheme : int { proposed = 0, cgg = 1, ncgg = 2, fprus = 3 };

inline constexpr Scheme kAllSchemes[] = {Scheme::proposed, Scheme::cgg, Scheme::ncgg,
                                         Scheme::fprus};

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::proposed: return "proposed";
    case Scheme::cgg: return "cgg";
    case Scheme::ncgg: return "ncgg";
    case Scheme::fprus: return "fprus";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view name) {
  for (Scheme s : kAllSchemes)
    if (name == scheme_name(s)) return s;
  throw std::invalid_argument("unknown scheme '" + std::string(name) +
                              "' (expected proposed, cgg, ncgg, or fprus)");
}

// Canonical order, duplicates dropped.
inline std::vector<Scheme> normalize_schemes(const std::vector<Scheme>& in) {
  std::vector<Scheme> out;
  for (Scheme s : kAllSchemes)
    for (Scheme t : in)
      if (t == s) {
        out.push_back(s);
        break;
      }
  if (out.empty()) throw std::invalid_argument("engine: no schemes requested");
  return out;
}

struct RunConfig {
  ChannelParams channel{};  // subchannels, users, taps, innovation rate, delay
  int mcs_count = 15;       // entries of the default modulation family
  std::optional<McsTable> mcs_override;
  UtilitySpec utility{};
  int particles = 30;        // tracked posterior support
  int genie_particles = 100; // causal genie posterior support
  double snr_db = 10.0;      // sets budget = 10^(snr/10) * subchannels
  std::optional<double> x_con;  // explicit budget, overrides snr_db
  int slots = 100;
  int warmup = 50;  // slots excluded from summary averages
  int realizations = 500;
  std::uint64_t seed = 1;
  std::vector<Scheme> schemes{Scheme::proposed, Scheme::cgg, Scheme::ncgg, Scheme::fprus};
  double kappa_rel = 1e-4;
  double root_tol = 1e-9;
  bool resample = false;      // systematic resampling of the tracked belief
  bool dump_channel = false;  // keep per-slot true gains in the results

  double budget() const {
    return x_con ? *x_con : std::pow(10.0, snr_db / 10.0) * channel.num_subchannels;
  }

  McsTable table() const {
    return mcs_override ? *mcs_override : McsTable::uncoded_qam(mcs_count);
  }

  SolverConfig solver() const {
    SolverConfig c;
    c.budget = budget();
    c.kappa_rel = kappa_rel;
    c.root_tol = root_tol;
    return c;
  }

  void validate() const {
    channel.validate();
    if (!mcs_override && (mcs_count < 1 || mcs_count > 30))
      throw std::invalid_argument("engine: need mcs_count in [1, 30]");
    if (particles < 1) throw std::invalid_argument("engine: need particles >= 1");
    if (genie_particles < 1) throw std::invalid_argument("engine: need genie_particles >= 1");
    if (slots < 1) throw std::invalid_argument("engine: need slots >= 1");
    if (warmup < 0 || warmup >= slots)
      throw std::invalid_argument("engine: need 0 <= warmup < slots");
    if (realizations < 1) throw std::invalid_argument("engine: need realizations >= 1");
    if (!(budget() > 0.0) || !std::isfinite(budget()))
      throw std::invalid_argument("engine: need a positive finite power budget");
    normalize_schemes(schemes);
    utility.validate(channel.num_users, table());
  }
};

struct SlotRecord {
  int slot = 0;  // 1-based transmission index
  double goodput_expected = 0.0;  // sum of (1 - error(true gain)) * rate
  double goodput_realized = 0.0;  // sum of rate over delivered packets
  double total_power = 0.0;
  double gap_bound = std::numeric_limits<double>::quiet_NaN();  // tracked scheme only
};

struct SchemeTrace {
  Scheme scheme = Scheme::proposed;
  std::vector<SlotRecord> slots;
  long power_evals = 0;
  long completions = 0;
  long degenerate_resets = 0;  // tracked scheme only
};

struct RealizationResult {
  int realization = 0;
  std::uint64_t trajectory_hash = 0;  // fingerprint of the true tap trajectory
  std::vector<SchemeTrace> traces;    // canonical scheme order
  std::vector<double> channel_dump;   // [slot-1][k * N + n] when requested
};

// Mean of the true-gain goodput of a schedule.
inline double expected_goodput(const Schedule& s, const std::vector<double>& gains,
                               const McsTable& table) {
  int N = s.num_subchannels();
  double sum = 0.0;
  for (int n = 0; n < N; ++n) {
    const auto& e = s.entries[static_cast<std::size_t>(n)];
    if (e) sum += goodput(table[e->mcs], e->power, gains[static_cast<std::size_t>(e->user) * N + n]);
  }
  return sum;
}

// Bits actually delivered per the outcome frame.
inline double realized_goodput(const FeedbackFrame& f, const Schedule& s,
                               const McsTable& table) {
  double sum = 0.0;
  for (int n = 0; n < s.num_subchannels(); ++n) {
    const auto& e = s.entries[static_cast<std::size_t>(n)];
    if (e && f.at(n, e->user) == Ack::ack) sum += table[e->mcs].r;
  }
  return sum;
}

namespace detail {

inline void fnv_mix(std::uint64_t& h, double v) {
  h = (h ^ std::bit_cast<std::uint64_t>(v)) * 0x100000001b3ull;
}

}  // namespace detail

inline RealizationResult run_realization(const RunConfig& cfg, int realization) {
  cfg.validate();
  const ChannelParams& p = cfg.channel;
  const McsTable table = cfg.table();
  const SolverConfig scfg = cfg.solver();
  const SsgMap map(p);
  const int K = p.num_users;
  const int N = p.num_subchannels;
  const int T = cfg.slots;
  const int d = p.delay;
  const auto schemes = normalize_schemes(cfg.schemes);
  const std::uint64_t rz = static_cast<std::uint64_t>(realization);

  std::vector<Rng> chan_rngs, belief_rngs, genie_rngs;
  for (int k = 0; k < K; ++k) {
    chan_rngs.emplace_back(stream_seed(cfg.seed, rz, StreamKind::channel, k));
    belief_rngs.emplace_back(stream_seed(cfg.seed, rz, StreamKind::belief, k));
    genie_rngs.emplace_back(stream_seed(cfg.seed, rz, StreamKind::genie, k));
  }
  Rng sched_rng(stream_seed(cfg.seed, rz, StreamKind::scheduler));
  std::vector<Rng> outcome_rngs;
  for (Scheme s : kAllSchemes)
    outcome_rngs.emplace_back(
        stream_seed(cfg.seed, rz, StreamKind::outcome, static_cast<std::uint64_t>(s)));

  // Shared trajectory, slots 0..T; transmissions happen on slots 1..T.
  std::vector<ChannelState> states;
  states.reserve(static_cast<std::size_t>(T) + 1);
  states.push_back(init_state(p, chan_rngs));
  for (int t = 1; t <= T; ++t) {
    ChannelState next = states.back();
    step_state(next, p, chan_rngs);
    states.push_back(std::move(next));
  }

  RealizationResult res;
  res.realization = realization;
  std::uint64_t h = 14695981039346656037ull;
  for (const auto& st : states)
    for (const auto& tap : st.taps) {
      detail::fnv_mix(h, tap.real());
      detail::fnv_mix(h, tap.imag());
    }
  res.trajectory_hash = h;
  res.traces.resize(schemes.size());
  for (std::size_t i = 0; i < schemes.size(); ++i) {
    res.traces[i].scheme = schemes[i];
    res.traces[i].slots.reserve(static_cast<std::size_t>(T));
  }

  bool track = false;
  for (Scheme s : schemes) track |= s == Scheme::proposed;
  std::vector<Belief> beliefs;
  std::vector<Schedule> tracked_scheds;   // [t - 1]
  std::vector<FeedbackFrame> tracked_frames;

  for (int t = 1; t <= T; ++t) {
    const ChannelState& now = states[static_cast<std::size_t>(t)];
    std::vector<double> gains = subchannel_gains(now, p, map);
    if (cfg.dump_channel)
      res.channel_dump.insert(res.channel_dump.end(), gains.begin(), gains.end());

    if (track) {
      if (t == 1) {
        for (int k = 0; k < K; ++k)
          beliefs.push_back(init_belief(p, cfg.particles, belief_rngs[static_cast<std::size_t>(k)]));
      } else if (t - d < 1) {
        for (int k = 0; k < K; ++k)
          refresh_prior(beliefs[static_cast<std::size_t>(k)], p,
                        belief_rngs[static_cast<std::size_t>(k)]);
      } else {
        const Schedule& past_sched = tracked_scheds[static_cast<std::size_t>(t - d - 1)];
        const FeedbackFrame& past_frame = tracked_frames[static_cast<std::size_t>(t - d - 1)];
        for (int k = 0; k < K; ++k)
          absorb_feedback(beliefs[static_cast<std::size_t>(k)], p, map, table, past_frame,
                          past_sched, k, belief_rngs[static_cast<std::size_t>(k)],
                          cfg.resample);
      }
    }

    for (std::size_t si = 0; si < schemes.size(); ++si) {
      Scheme s = schemes[si];
      SchemeTrace& trace = res.traces[si];
      Schedule sched(N);
      double gap = std::numeric_limits<double>::quiet_NaN();
      switch (s) {
        case Scheme::proposed: {
          std::vector<SsgPosterior> posts;
          posts.reserve(static_cast<std::size_t>(K));
          for (int k = 0; k < K; ++k)
            posts.push_back(belief_posterior(beliefs[static_cast<std::size_t>(k)], map));
          AllocResult ar = greedy_allocate(posts, table, cfg.utility, scfg);
          sched = std::move(ar.schedule);
          gap = ar.gap.bound;
          trace.power_evals += ar.stats.power_evals;
          trace.completions += ar.stats.completions;
          break;
        }
        case Scheme::cgg: {
          const ChannelState& lagged = states[static_cast<std::size_t>(std::max(0, t - d))];
          AllocResult ar = cgg_allocate(lagged, p, map, table, cfg.utility, scfg,
                                        cfg.genie_particles, genie_rngs);
          sched = std::move(ar.schedule);
          trace.power_evals += ar.stats.power_evals;
          trace.completions += ar.stats.completions;
          break;
        }
        case Scheme::ncgg: {
          AllocResult ar = ncgg_allocate(gains, K, N, table, cfg.utility, scfg);
          sched = std::move(ar.schedule);
          trace.power_evals += ar.stats.power_evals;
          trace.completions += ar.stats.completions;
          break;
        }
        case Scheme::fprus: {
          sched = fprus_allocate(N, K, table, scfg.budget, sched_rng);
          break;
        }
      }
      FeedbackFrame frame =
          gen_feedback(gains, K, sched, table, t, outcome_rngs[static_cast<std::size_t>(s)]);
      SlotRecord rec;
      rec.slot = t;
      rec.goodput_expected = expected_goodput(sched, gains, table);
      rec.goodput_realized = realized_goodput(frame, sched, table);
      rec.total_power = sched.total_power();
      rec.gap_bound = gap;
      trace.slots.push_back(rec);
      if (s == Scheme::proposed) {
        tracked_scheds.push_back(std::move(sched));
        tracked_frames.push_back(std::move(frame));
      }
    }
  }

  if (track) {
    SchemeTrace& tr = res.traces[0];  // proposed is first in canonical order when present
    for (const Belief& b : beliefs) tr.degenerate_resets += b.degenerate_resets;
  }
  return res;
}

struct SchemeSummary {
  Scheme scheme = Scheme::proposed;
  double goodput_expected_mean = 0.0;
  double goodput_expected_se = 0.0;
  double goodput_realized_mean = 0.0;
  double goodput_realized_se = 0.0;
  double total_power_mean = 0.0;
  double gap_bound_mean = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

// Mean of per-realization means, with the standard error across realizations.
inline MeanSe mean_se(const std::vector<double>& per_realization) {
  MeanSe out;
  std::size_t n = per_realization.size();
  if (n == 0) return out;
  double sum = 0.0;
  for (double v : per_realization) sum += v;
  out.mean = sum / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double v : per_realization) ss += (v - out.mean) * (v - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
  }
  return out;
}

}  // namespace detail

inline std::vector<SchemeSummary> summarize(const RunConfig& cfg,
                                            const std::vector<RealizationResult>& rs) {
  auto schemes = normalize_schemes(cfg.schemes);
  std::vector<SchemeSummary> out;
  for (std::size_t si = 0; si < schemes.size(); ++si) {
    SchemeSummary s;
    s.scheme = schemes[si];
    std::vector<double> exp_means, real_means, power_means, gap_means;
    for (const auto& r : rs) {
      double ge = 0.0, gr = 0.0, tp = 0.0, gb = 0.0;
      int count = 0;
      for (const SlotRecord& rec : r.traces[si].slots) {
        if (rec.slot <= cfg.warmup) continue;
        ge += rec.goodput_expected;
        gr += rec.goodput_realized;
        tp += rec.total_power;
        gb += rec.gap_bound;  // NaN propagates for schemes without a certificate
        ++count;
      }
      if (count == 0) continue;
      exp_means.push_back(ge / count);
      real_means.push_back(gr / count);
      power_means.push_back(tp / count);
      gap_means.push_back(gb / count);
    }
    auto e = detail::mean_se(exp_means);
    auto rl = detail::mean_se(real_means);
    s.goodput_expected_mean = e.mean;
    s.goodput_expected_se = e.se;
    s.goodput_realized_mean = rl.mean;
    s.goodput_realized_se = rl.se;
    s.total_power_mean = detail::mean_se(power_means).mean;
    s.gap_bound_mean = detail::mean_se(gap_means).mean;
    out.push_back(s);
  }
  return out;
}

struct RunResult {
  RunConfig cfg;
  std::vector<RealizationResult> realizations;
  std::vector<SchemeSummary> summaries;
};

// Worker count: ARQSCHED_WORKERS if set, else the hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("ARQSCHED_WORKERS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(std::min(v, 256l));
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

// Runs every realization, optionally across a worker pool. Results are
// ordered by realization index and bit-identical regardless of worker count.
inline RunResult run_all(const RunConfig& cfg,
                         const std::function<void(int, int)>& progress = {}) {
  cfg.validate();
  const int R = cfg.realizations;
  std::vector<RealizationResult> results(static_cast<std::size_t>(R));
  int workers = std::min(worker_count(), R);
  if (workers <= 1) {
    for (int r = 0; r < R; ++r) {
      results[static_cast<std::size_t>(r)] = run_realization(cfg, r);
      if (progress) progress(r + 1, R);
    }
  } else {
    std::atomic<int> next{0};
    std::atomic<int> done{0};
    std::mutex mu;
    std::exception_ptr err;
    auto work = [&] {
      while (true) {
        int r = next.fetch_add(1);
        if (r >= R) return;
        try {
          results[static_cast<std::size_t>(r)] = run_realization(cfg, r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
          return;
        }
        int d = done.fetch_add(1) + 1;
        if (progress) {
          std::lock_guard<std::mutex> lock(mu);
          progress(d, R);
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
  }
  RunResult out{cfg, std::move(results), {}};
  out.summaries = summarize(cfg, out.realizations);
  return out;
}

}  // namespace arqsched
