#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxsplit/solvers.hpp"

namespace proxsplit {

inline constexpr const char* kCsvHeader =
    "k,gamma_k,psi_gap,dist_sq,ergodic_gap,wall_ms,msgs,bytes,feasible";

/// Shortest round-trip decimal representation, so identical doubles
/// always print identically.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // prefer the shortest representation that round-trips
  for (int prec = 1; prec < 17; ++prec) {
    char cand[32];
    std::snprintf(cand, sizeof(cand), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(cand, "%lf", &back);
    if (back == v) return cand;
  }
  return buf;
}

/// include_wall=false writes 0 in the wall_ms column, which keeps CSVs
/// byte-identical across reruns and engine modes.
inline void write_csv(std::ostream& os, const std::vector<TraceRecord>& trace,
                      bool include_wall = false) {
  os << kCsvHeader << "\n";
  for (const auto& r : trace) {
    os << r.k << ',' << format_double(r.gamma_k) << ','
       << format_double(r.psi_gap) << ',' << format_double(r.dist_sq) << ','
       << format_double(r.ergodic_gap) << ','
       << format_double(include_wall ? r.wall_ms : 0.0) << ',' << r.msgs
       << ',' << r.bytes << ',' << (r.feasible ? 1 : 0) << "\n";
  }
}

inline void write_csv_file(const std::string& path,
                           const std::vector<TraceRecord>& trace,
                           bool include_wall = false) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(out, trace, include_wall);
}

inline std::vector<TraceRecord> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader)
    throw std::runtime_error("bad CSV header: " + line);
  std::vector<TraceRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    TraceRecord r;
    int feas = 1;
    if (std::sscanf(line.c_str(), "%ld,%lf,%lf,%lf,%lf,%lf,%ld,%ld,%d", &r.k,
                    &r.gamma_k, &r.psi_gap, &r.dist_sq, &r.ergodic_gap,
                    &r.wall_ms, &r.msgs, &r.bytes, &feas) != 9)
      throw std::runtime_error("bad CSV row at line " + std::to_string(lineno));
    r.feasible = feas != 0;
    if (!out.empty() && r.k <= out.back().k)
      throw std::runtime_error("non-increasing k at line " +
                               std::to_string(lineno));
    out.push_back(r);
  }
  return out;
}

inline std::vector<TraceRecord> read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_csv(in);
}

}  // namespace proxsplit
