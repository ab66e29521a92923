#pragma once
// Concave reward shaping applied to expected goodput. Every member of the
// family is strictly increasing, concave, twice differentiable on its domain,
// and has a finite derivative at zero; the allocator relies on all four
// properties.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arqsched/mcs.hpp"

namespace arqsched {

enum class UtilityKind {
  identity,           // U(x) = x
  weighted_identity,  // U(x) = w_k * x, per-user weights
  capacity_log,       // U(x) = log(1 - log(1 - x)), x in [0, 1)
};

struct UtilitySpec {
  UtilityKind kind = UtilityKind::identity;
  std::vector<double> weights;  // per user, weighted_identity only

  double value(int user, double x) const {
    switch (kind) {
      case UtilityKind::identity:
        return x;
      case UtilityKind::weighted_identity:
        return weights[static_cast<std::size_t>(user)] * x;
      case UtilityKind::capacity_log: {
        x = guard_unit(x);
        // log(1 - log(1 - x)); with a single unit-rate entry this shape turns
        // expected goodput into the familiar log(1 + P * gamma) law.
        return std::log1p(-std::log1p(-x));
      }
    }
    return x;
  }

  double prime(int user, double x) const {
    switch (kind) {
      case UtilityKind::identity:
        return 1.0;
      case UtilityKind::weighted_identity:
        return weights[static_cast<std::size_t>(user)];
      case UtilityKind::capacity_log: {
        x = guard_unit(x);
        return 1.0 / ((1.0 - x) * (1.0 - std::log1p(-x)));
      }
    }
    return 1.0;
  }

  // The derivative when it does not depend on x; lets point-mass posteriors
  // invert the power stationarity condition in closed form.
  std::optional<double> constant_prime(int user) const {
    switch (kind) {
      case UtilityKind::identity:
        return 1.0;
      case UtilityKind::weighted_identity:
        return weights[static_cast<std::size_t>(user)];
      case UtilityKind::capacity_log:
        return std::nullopt;
    }
    return 1.0;
  }

  // Rejects combinations the family is not defined for.
  void validate(int num_users, const McsTable& table) const {
    switch (kind) {
      case UtilityKind::identity:
        break;
      case UtilityKind::weighted_identity: {
        if (static_cast<int>(weights.size()) != num_users)
          throw std::invalid_argument("utility: need one weight per user (" +
                                      std::to_string(num_users) + ")");
        for (double w : weights)
          if (!(w > 0) || !std::isfinite(w))
            throw std::invalid_argument("utility: weights must be positive and finite");
        break;
      }
      case UtilityKind::capacity_log: {
        // Defined only for a single unit-rate entry whose goodput stays in
        // [0, 1); mixed-rate tables are rejected rather than reinterpreted.
        if (table.size() != 1 || table[0].r != 1.0 || table[0].a > 1.0)
          throw std::invalid_argument(
              "utility: capacity-log requires a single entry with r = 1 and a <= 1");
        break;
      }
    }
  }

 private:
  static double guard_unit(double x) {
    if (x >= 1.0) throw std::domain_error("utility: capacity-log needs x < 1");
    return std::min(x, 1.0 - 1e-12);
  }
};

inline UtilitySpec identity_utility() { return {}; }

}  // namespace arqsched
