#pragma once

#include <functional>
#include <memory>
#include <utility>

#include "proxsplit/vec.hpp"

namespace proxsplit {

/// Abstract linear operator K with its adjoint and a certified upper
/// bound on the squared operator norm.
struct LinearMap {
  std::string in_space;
  std::string out_space;
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::function<Vec(const Vec&)> apply;
  std::function<Vec(const Vec&)> adjoint;
  double norm_sq_bound = 0.0;
};

inline LinearMap identity_map(std::size_t n, const std::string& space) {
  LinearMap m;
  m.in_space = m.out_space = space;
  m.in_dim = m.out_dim = n;
  m.apply = [](const Vec& x) { return x; };
  m.adjoint = [](const Vec& x) { return x; };
  m.norm_sq_bound = 1.0;
  return m;
}

inline LinearMap scaled_identity_map(std::size_t n, const std::string& space,
                                     double a) {
  LinearMap m;
  m.in_space = m.out_space = space;
  m.in_dim = m.out_dim = n;
  m.apply = [a](const Vec& x) { return a * Vec(x); };
  m.adjoint = [a](const Vec& x) { return a * Vec(x); };
  m.norm_sq_bound = a * a;
  return m;
}

/// Dense row-major matrix as a LinearMap; for tests and small problems.
inline LinearMap dense_map(std::vector<double> a, std::size_t rows,
                           std::size_t cols, const std::string& in_space,
                           const std::string& out_space,
                           double norm_sq_bound) {
  auto mat = std::make_shared<std::vector<double>>(std::move(a));
  LinearMap m;
  m.in_space = in_space;
  m.out_space = out_space;
  m.in_dim = cols;
  m.out_dim = rows;
  m.apply = [mat, rows, cols, out_space](const Vec& x) {
    Vec y(rows, out_space);
    for (std::size_t i = 0; i < rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols; ++j) s += (*mat)[i * cols + j] * x[j];
      y[i] = s;
    }
    return y;
  };
  m.adjoint = [mat, rows, cols, in_space](const Vec& u) {
    Vec y(cols, in_space);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        y[j] += (*mat)[i * cols + j] * u[i];
    return y;
  };
  m.norm_sq_bound = norm_sq_bound;
  return m;
}

/// Wraps a map and counts apply/adjoint calls; used to verify the
/// one-K*-per-iteration property of PDDY.
struct CountingMap {
  std::shared_ptr<long> applies = std::make_shared<long>(0);
  std::shared_ptr<long> adjoints = std::make_shared<long>(0);
  LinearMap map;

  explicit CountingMap(const LinearMap& base) {
    map = base;
    auto ap = applies;
    auto ad = adjoints;
    auto base_apply = base.apply;
    auto base_adjoint = base.adjoint;
    map.apply = [ap, base_apply](const Vec& x) {
      ++*ap;
      return base_apply(x);
    };
    map.adjoint = [ad, base_adjoint](const Vec& x) {
      ++*ad;
      return base_adjoint(x);
    };
  }
};

}  // namespace proxsplit
