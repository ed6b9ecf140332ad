#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace proxsplit {

enum class ScheduleKind { constant, accel_pd3o, accel_pddy };

inline std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::accel_pd3o: return "accel_pd3o";
    case ScheduleKind::accel_pddy: return "accel_pddy";
  }
  return "?";
}

inline ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "constant") return ScheduleKind::constant;
  if (s == "accel_pd3o") return ScheduleKind::accel_pd3o;
  if (s == "accel_pddy") return ScheduleKind::accel_pddy;
  throw std::invalid_argument("unknown schedule kind: " + s);
}

/// gamma_{k+1} = (-g^2 mF k + g sqrt((g mF k)^2 + 1 + 2 g mR)) / (1 + 2 g mR)
inline double next_gamma_pd3o(double gamma_k, double mu_f, double mu_r,
                              double kappa) {
  if (gamma_k <= 0.0) throw std::invalid_argument("next_gamma_pd3o: gamma <= 0");
  double a = gamma_k * mu_f * kappa;
  return (-gamma_k * a + gamma_k * std::sqrt(a * a + 1.0 + 2.0 * gamma_k * mu_r)) /
         (1.0 + 2.0 * gamma_k * mu_r);
}

/// gamma_{k+1} = -g^2 mF k + g sqrt((g mF k)^2 + 1); requires mu_f > 0.
inline double next_gamma_pddy(double gamma_k, double mu_f, double kappa) {
  if (gamma_k <= 0.0) throw std::invalid_argument("next_gamma_pddy: gamma <= 0");
  if (mu_f <= 0.0)
    throw std::invalid_argument("next_gamma_pddy: requires mu_f > 0");
  double a = gamma_k * mu_f * kappa;
  return -gamma_k * a + gamma_k * std::sqrt(a * a + 1.0);
}

/// Stepsize sequence (gamma_k). gamma_1 = gamma_0; the accelerated
/// recursions start producing gamma_2 from gamma_1.
struct Schedule {
  ScheduleKind kind = ScheduleKind::constant;
  double gamma0 = 1.0;
  double kappa = 0.15;   // unused for constant
  double mu_f = 0.0;
  double mu_r = 0.0;     // unused for accel_pddy

  void validate(double lipschitz_L) const {
    if (gamma0 <= 0.0) throw std::invalid_argument("schedule: gamma0 <= 0");
    if (lipschitz_L > 0.0) {
      if (kind == ScheduleKind::constant) {
        if (gamma0 >= 2.0 / lipschitz_L)
          throw std::invalid_argument("schedule: gamma0 >= 2/L_F");
      } else {
        if (kappa <= 0.0 || kappa >= 1.0)
          throw std::invalid_argument("schedule: kappa outside (0,1)");
        // boundary allowed: the reference experiments run right at it
        if (gamma0 > 2.0 * (1.0 - kappa) / lipschitz_L)
          throw std::invalid_argument("schedule: gamma0 > 2(1-kappa)/L_F");
      }
    }
    if (kind == ScheduleKind::accel_pddy && mu_f <= 0.0)
      throw std::invalid_argument("schedule: accel_pddy requires mu_f > 0");
  }

  double next(double gamma_k) const {
    switch (kind) {
      case ScheduleKind::constant: return gamma0;
      case ScheduleKind::accel_pd3o:
        return next_gamma_pd3o(gamma_k, mu_f, mu_r, kappa);
      case ScheduleKind::accel_pddy:
        return next_gamma_pddy(gamma_k, mu_f, kappa);
    }
    return gamma0;
  }
};

/// Iterator over (gamma_k)_{k>=0} with gamma_1 = gamma_0.
class ScheduleIterator {
 public:
  explicit ScheduleIterator(const Schedule& s) : sched_(s), gamma_(s.gamma0) {}

  double current() const { return gamma_; }

  double advance() {
    // gamma_1 = gamma_0; the recursion applies from k >= 1
    if (k_ >= 1) gamma_ = sched_.next(gamma_);
    ++k_;
    return gamma_;
  }

 private:
  Schedule sched_;
  long k_ = 0;
  double gamma_;
};

/// Returns k_max * gamma_{k_max} * (mu_f kappa + mu_r); the remark after
/// the accelerated-rate theorem says this tends to 1.
inline double asymptote_check(const Schedule& s, long k_max) {
  double rate = s.mu_f * s.kappa + s.mu_r;
  if (s.kind == ScheduleKind::accel_pddy) rate = s.mu_f * s.kappa;
  if (rate <= 0.0)
    throw std::invalid_argument("asymptote_check: mu_f*kappa + mu_r == 0");
  ScheduleIterator it(s);
  double g = it.current();
  for (long k = 1; k <= k_max; ++k) g = it.advance();
  return static_cast<double>(k_max) * g * rate;
}

}  // namespace proxsplit
