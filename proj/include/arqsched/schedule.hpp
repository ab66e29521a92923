#pragma once
// Per-slot downlink allocation: at most one (user, mcs) pair per subchannel
// plus a transmit power. Subchannels may be idle.

#include <optional>
#include <vector>

namespace arqsched {

struct Assignment {
  int user = 0;       // 0-based
  int mcs = 0;        // 0-based position in the mcs table
  double power = 0.0;
};

struct Schedule {
  std::vector<std::optional<Assignment>> entries;  // one per subchannel

  explicit Schedule(int num_subchannels = 0)
      : entries(static_cast<std::size_t>(num_subchannels)) {}

  int num_subchannels() const { return static_cast<int>(entries.size()); }

  double total_power() const {
    double sum = 0.0;
    for (const auto& e : entries)
      if (e) sum += e->power;
    return sum;
  }

  int num_scheduled() const {
    int count = 0;
    for (const auto& e : entries)
      if (e) ++count;
    return count;
  }

  // Equality of the assignment pattern, powers ignored. Used to detect when
  // two dual endpoints project onto the same allocation.
  bool same_assignments(const Schedule& other) const {
    if (entries.size() != other.entries.size()) return false;
    for (std::size_t n = 0; n < entries.size(); ++n) {
      const auto& x = entries[n];
      const auto& y = other.entries[n];
      if (x.has_value() != y.has_value()) return false;
      if (x && (x->user != y->user || x->mcs != y->mcs)) return false;
    }
    return true;
  }
};

}  // namespace arqsched
