#pragma once
// Modulation/coding family: indexed entries (payload rate, error-curve
// amplitude and power slope) plus the packet error and goodput maps they
// induce. The default family models uncoded square QAM, one symbol per
// subchannel use.

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "arqsched/text.hpp"

namespace arqsched {

struct McsEntry {
  int m = 0;      // published table index, 1-based
  double r = 0;   // payload bits per packet, > 0
  double a = 0;   // error-curve amplitude, > 0
  double b = 0;   // error-curve power slope, > 0
};

// Packet error probability a * exp(-b * P * gamma), clipped to a probability.
inline double error_rate(const McsEntry& e, double power, double ssg) {
  return std::min(1.0, e.a * std::exp(-e.b * power * ssg));
}

// Expected delivered bits for one packet.
inline double goodput(const McsEntry& e, double power, double ssg) {
  return (1.0 - error_rate(e, power, ssg)) * e.r;
}

class McsTable {
 public:
  explicit McsTable(std::vector<McsEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw std::invalid_argument("mcs table: no entries");
    double prev_r = 0.0;
    for (const auto& e : entries_) {
      if (!(e.r > 0) || !std::isfinite(e.r) || !(e.a > 0) || !std::isfinite(e.a) ||
          !(e.b > 0) || !std::isfinite(e.b))
        throw std::invalid_argument("mcs table: r, a, b must be positive and finite");
      if (!(e.r > prev_r))
        throw std::invalid_argument("mcs table: rates must be strictly increasing");
      prev_r = e.r;
    }
  }

  // Uncoded 2^(m+1)-QAM family: r_m = m+1 bits, unit amplitude, and slope
  // 1.5 / (2^(m+1) - 1) from the square-QAM minimum-distance exponent.
  static McsTable uncoded_qam(int count = 15) {
    if (count < 1 || count > 30)
      throw std::invalid_argument("mcs table: count must be in [1, 30]");
    std::vector<McsEntry> v;
    v.reserve(static_cast<std::size_t>(count));
    for (int m = 1; m <= count; ++m) {
      double levels = std::ldexp(1.0, m + 1) - 1.0;
      v.push_back({m, static_cast<double>(m + 1), 1.0, 1.5 / levels});
    }
    return McsTable(std::move(v));
  }

  int size() const { return static_cast<int>(entries_.size()); }
  const McsEntry& operator[](int i) const { return entries_[static_cast<std::size_t>(i)]; }
  const std::vector<McsEntry>& entries() const { return entries_; }

  std::string to_csv() const {
    std::string out = "m,r,a,b\n";
    for (const auto& e : entries_) {
      out += std::to_string(e.m);
      out += ',';
      out += format_double(e.r);
      out += ',';
      out += format_double(e.a);
      out += ',';
      out += format_double(e.b);
      out += '\n';
    }
    return out;
  }

  static McsTable from_csv_text(const std::string& text) {
    std::vector<McsEntry> v;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      if (v.empty() && t.substr(0, 2) == "m,") continue;  // header row
      auto fields = split(t, ',');
      if (fields.size() != 4)
        throw std::invalid_argument("mcs csv line " + std::to_string(lineno) +
                                    ": expected 4 fields (m, r, a, b)");
      std::string ctx = "mcs csv line " + std::to_string(lineno);
      McsEntry e;
      e.m = static_cast<int>(parse_int(fields[0], ctx));
      e.r = parse_double(fields[1], ctx);
      e.a = parse_double(fields[2], ctx);
      e.b = parse_double(fields[3], ctx);
      v.push_back(e);
    }
    return McsTable(std::move(v));
  }

  static McsTable load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mcs table file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_csv_text(ss.str());
  }

 private:
  std::vector<McsEntry> entries_;
};

}  // namespace arqsched
