#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace proxsplit {

/// Flat real vector tagged with the Hilbert space it lives in.
/// Binary operations require matching space tags and lengths.
struct Vec {
  std::vector<double> data;
  std::string space;

  Vec() = default;
  Vec(std::size_t n, const std::string& sp, double fill = 0.0)
      : data(n, fill), space(sp) {}
  Vec(std::vector<double> d, const std::string& sp)
      : data(std::move(d)), space(sp) {}

  std::size_t size() const { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  void check_compatible(const Vec& o) const {
    if (space != o.space || data.size() != o.data.size())
      throw std::invalid_argument("Vec space mismatch: " + space + " vs " +
                                  o.space);
  }

  bool all_finite() const {
    for (double x : data)
      if (!std::isfinite(x)) return false;
    return true;
  }

  Vec& operator+=(const Vec& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] -= o.data[i];
    return *this;
  }
  Vec& operator*=(double a) {
    for (double& x : data) x *= a;
    return *this;
  }

  /// this += a * o
  Vec& axpy(double a, const Vec& o) {
    check_compatible(o);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += a * o.data[i];
    return *this;
  }
};

inline Vec operator+(Vec a, const Vec& b) { return a += b; }
inline Vec operator-(Vec a, const Vec& b) { return a -= b; }
inline Vec operator*(double s, Vec a) { return a *= s; }

inline double dot(const Vec& a, const Vec& b) {
  a.check_compatible(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_sq(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(norm_sq(a)); }

inline double dist_sq(const Vec& a, const Vec& b) {
  a.check_compatible(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  a.check_compatible(b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace proxsplit
