#pragma once

#include <algorithm>
#include <random>

#include "proxsplit/linear_map.hpp"
#include "proxsplit/terms.hpp"

namespace proxsplit {

struct PowerIterResult {
  double raw = 0.0;  // Rayleigh-quotient estimate of ||K||^2
  double eta = 0.0;  // raw * 1.01, usable as the eta >= ||K||^2 input
};

/// Power iteration on K*K. The Rayleigh quotient converges to ||K||^2
/// from below, hence the 1.01 safety factor on the returned eta.
inline PowerIterResult power_iteration_norm_sq(const LinearMap& op,
                                               double tol = 1e-12,
                                               int max_iter = 2000,
                                               unsigned seed = 1234) {
  if (max_iter < 1) throw std::invalid_argument("power_iteration: max_iter < 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(op.in_dim, op.in_space);
  for (auto& x : v.data) x = gauss(rng);
  double nv = norm(v);
  if (nv == 0.0) return {};
  v *= 1.0 / nv;

  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vec w = op.adjoint(op.apply(v));
    double next = dot(v, w);  // Rayleigh quotient of K*K
    double nw = norm(w);
    if (nw == 0.0) return {};  // zero operator
    w *= 1.0 / nw;
    v = std::move(w);
    if (it > 0 && std::abs(next - lambda) <= tol * std::max(1.0, next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return {lambda, lambda * 1.01};
}

/// Max relative error of <Kx,u> vs <x,K*u> over random pairs.
inline double adjoint_check(const LinearMap& op, int trials = 20,
                            unsigned seed = 99) {
  if (trials < 1) throw std::invalid_argument("adjoint_check: trials < 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Vec x(op.in_dim, op.in_space);
    Vec u(op.out_dim, op.out_space);
    for (auto& a : x.data) a = gauss(rng);
    for (auto& a : u.data) a = gauss(rng);
    Vec kx = op.apply(x);
    Vec ktu = op.adjoint(u);
    double lhs = dot(kx, u);
    double rhs = dot(x, ktu);
    double denom = norm(kx) * norm(u) + 1e-300;
    worst = std::max(worst, std::abs(lhs - rhs) / denom);
  }
  return worst;
}

/// Central-difference gradient check on up to max_coords coordinates.
inline double grad_check(const SmoothTerm& f, const Vec& x, double h = 1e-5,
                         std::size_t max_coords = 50, unsigned seed = 7) {
  if (h <= 0.0) throw std::invalid_argument("grad_check: h <= 0");
  Vec g = f.gradient(x);
  std::vector<std::size_t> idx(x.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (idx.size() > max_coords) {
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(max_coords);
  }
  double gnorm = norm(g);
  double worst = 0.0;
  for (std::size_t i : idx) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    double fd = (f.value(xp) - f.value(xm)) / (2.0 * h);
    double err = std::abs(fd - g[i]) / (gnorm + std::abs(fd) + 1e-12);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace proxsplit
