#pragma once
// Deterministic random streams. Every stochastic component owns a generator
// derived from (master seed, realization, purpose, entity), so adding or
// removing schemes, users, or worker threads never shifts the draws consumed
// by another component.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace arqsched {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Purpose tag for stream derivation.
enum class StreamKind : std::uint64_t {
  channel = 1,    // tap initialization and evolution, one stream per user
  belief = 2,     // particle draws of the tracked posterior, one per user
  outcome = 3,    // packet success draws, one per scheme
  scheduler = 4,  // random user selection of the blind baseline
  genie = 5,      // genie posterior sampling, one per user
};

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t realization,
                                 StreamKind kind, std::uint64_t entity = 0) noexcept {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ (0x517cc1b727220a95ull + realization));
  s = splitmix64(s ^ (0x6c62272e07bb0142ull + static_cast<std::uint64_t>(kind)));
  s = splitmix64(s ^ (0x2545f4914f6cdd1dull + entity));
  return s;
}

// mt19937_64 wrapper with hand-rolled uniform, normal, and circularly
// symmetric complex normal draws. The standard distributions are
// implementation-defined, which would break cross-toolchain reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, n), n >= 1.
  std::uint32_t uniform_int(std::uint32_t n) {
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(gen_()) * n) >> 64);
  }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // in (0, 1], keeps the log finite
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Circularly symmetric complex normal with total variance var.
  std::complex<double> cnormal(double var) {
    double sigma = std::sqrt(0.5 * var);
    double re = sigma * normal();
    double im = sigma * normal();
    return {re, im};
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace arqsched
