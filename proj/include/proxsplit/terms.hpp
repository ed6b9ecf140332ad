#pragma once

#include <functional>
#include <limits>
#include <stdexcept>

#include "proxsplit/vec.hpp"

namespace proxsplit {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Convex L-smooth term F with gradient oracle.
struct SmoothTerm {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  double lipschitz_L = 0.0;
  double strong_mu = 0.0;
};

/// Convex proxable term. value() may return +inf (indicators).
/// smooth_L is set when the term is additionally L-smooth (e.g. Huber).
struct ProxTerm {
  std::function<double(const Vec&)> value;
  std::function<Vec(double, const Vec&)> prox;  // prox(gamma, z)
  double strong_mu = 0.0;
  double smooth_L = -1.0;  // < 0 means nonsmooth

  bool is_smooth() const { return smooth_L >= 0.0; }
};

inline ProxTerm zero_prox_term() {
  ProxTerm t;
  t.value = [](const Vec&) { return 0.0; };
  t.prox = [](double, const Vec& z) { return z; };
  t.smooth_L = 0.0;
  return t;
}

/// prox of the scaled conjugate, via the Moreau identity:
///   prox_{G*/tau}(z) = z - (1/tau) prox_{tau G}(tau z).
inline Vec prox_conjugate(const ProxTerm& term, double tau, const Vec& z) {
  if (tau <= 0.0) throw std::invalid_argument("prox_conjugate: tau <= 0");
  Vec w = tau * Vec(z);
  Vec p = term.prox(tau, w);
  Vec out = z;
  out.axpy(-1.0 / tau, p);
  return out;
}

}  // namespace proxsplit
