#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxsplit/solvers.hpp"

namespace proxsplit {

enum class RateModel { powerlaw, linear_geometric };
enum class TraceColumn { psi_gap, dist_sq, ergodic_gap };

inline std::string to_string(RateModel m) {
  return m == RateModel::powerlaw ? "powerlaw" : "linear_geometric";
}
inline std::string to_string(TraceColumn c) {
  switch (c) {
    case TraceColumn::psi_gap: return "psi_gap";
    case TraceColumn::dist_sq: return "dist_sq";
    case TraceColumn::ergodic_gap: return "ergodic_gap";
  }
  return "?";
}
inline RateModel rate_model_from_string(const std::string& s) {
  if (s == "powerlaw") return RateModel::powerlaw;
  if (s == "linear_geometric") return RateModel::linear_geometric;
  throw std::invalid_argument("unknown rate model: " + s);
}
inline TraceColumn trace_column_from_string(const std::string& s) {
  if (s == "psi_gap") return TraceColumn::psi_gap;
  if (s == "dist_sq") return TraceColumn::dist_sq;
  if (s == "ergodic_gap") return TraceColumn::ergodic_gap;
  throw std::invalid_argument("unknown trace column: " + s);
}

struct RateEstimate {
  RateModel model = RateModel::powerlaw;
  double slope = 0.0;   // of log(value) vs log(k) or vs k
  double factor = 0.0;  // exp(slope), meaningful for linear_geometric
  double r_squared = 0.0;
  long k_lo = 0, k_hi = 0;
};

inline constexpr double kGapFloor = 1e-15;

namespace detail {

struct FitResult {
  double slope, intercept, r_squared;
};

inline FitResult least_squares(const std::vector<double>& x,
                               const std::vector<double>& y) {
  std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  double nd = static_cast<double>(n);
  double vxx = sxx - sx * sx / nd;
  double vxy = sxy - sx * sy / nd;
  double vyy = syy - sy * sy / nd;
  if (vxx <= 0.0) throw std::invalid_argument("rate fit: degenerate abscissa");
  FitResult f;
  f.slope = vxy / vxx;
  f.intercept = (sy - f.slope * sx) / nd;
  f.r_squared = (vyy <= 0.0) ? 1.0 : (vxy * vxy) / (vxx * vyy);
  return f;
}

}  // namespace detail

/// Fits log(value) against log(k) (powerlaw) or k (linear_geometric) over
/// [k_lo, k_hi]; default window is the last half of the trace. Values are
/// clipped at 1e-15 before the log; once a trace hits that floor, the
/// remaining records are dropped from the window.
inline RateEstimate estimate_rate(const std::vector<TraceRecord>& trace,
                                  TraceColumn column, RateModel model,
                                  long k_lo = -1, long k_hi = -1) {
  if (trace.empty()) throw std::invalid_argument("estimate_rate: empty trace");
  if (k_lo < 0) k_lo = trace[trace.size() / 2].k;
  if (k_hi < 0) k_hi = trace.back().k;
  auto pick = [column](const TraceRecord& r) {
    switch (column) {
      case TraceColumn::psi_gap: return r.psi_gap;
      case TraceColumn::dist_sq: return r.dist_sq;
      case TraceColumn::ergodic_gap: return r.ergodic_gap;
    }
    return 0.0;
  };
  std::vector<double> xs, ys;
  for (const auto& r : trace) {
    if (r.k < k_lo || r.k > k_hi) continue;
    double v = pick(r);
    if (v <= kGapFloor) break;  // machine-precision floor reached
    xs.push_back(model == RateModel::powerlaw
                     ? std::log(static_cast<double>(r.k))
                     : static_cast<double>(r.k));
    ys.push_back(std::log(v));
  }
  if (xs.size() < 2)
    throw std::invalid_argument("estimate_rate: empty fit window");
  auto fit = detail::least_squares(xs, ys);
  RateEstimate est;
  est.model = model;
  est.slope = fit.slope;
  est.factor = std::exp(fit.slope);
  est.r_squared = fit.r_squared;
  est.k_lo = k_lo;
  est.k_hi = k_hi;
  return est;
}

}  // namespace proxsplit
