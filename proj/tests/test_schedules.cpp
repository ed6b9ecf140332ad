#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "proxsplit/schedules.hpp"

using namespace proxsplit;

namespace {

// gamma_{k+1} is the positive root of
//   (1 + 2 g mu_r) x^2 + 2 g^2 mu_f kappa x - g^2 = 0
// with x = gamma_{k+1}, g = gamma_k. The residual of that defining
// quadratic is an oracle independent of the closed-form update.
double pd3o_defining_residual(double g, double x, double mu_f, double mu_r,
                              double kappa) {
  return (1.0 + 2.0 * g * mu_r) * x * x + 2.0 * g * g * mu_f * kappa * x -
         g * g;
}

double pddy_defining_residual(double g, double x, double mu_f, double kappa) {
  return x * x + 2.0 * g * g * mu_f * kappa * x - g * g;
}

}  // namespace

TEST_CASE("closed-form values of the stepsize recursions") {
  // mu_f = 0, mu_r = 0.5, g = 1: next = sqrt(2)/(1+1) = 1/sqrt(2)
  CHECK(next_gamma_pd3o(1.0, 0.0, 0.5, 0.15) ==
        doctest::Approx(0.7071067811865476).epsilon(1e-14));
  // g = 1, mu_f = 1, kappa = 0.5: next = -1/2 + sqrt(5)/2 (golden ratio - 1)
  CHECK(next_gamma_pddy(1.0, 1.0, 0.5) ==
        doctest::Approx(0.6180339887498949).epsilon(1e-14));
  // no strong convexity at all: both recursions keep gamma unchanged
  CHECK(next_gamma_pd3o(0.8, 0.0, 0.0, 0.3) == doctest::Approx(0.8));
}

TEST_CASE("updates satisfy their defining quadratics") {
  for (double g : {0.1, 0.7, 1.7}) {
    for (double mu_f : {0.0, 0.01, 0.4}) {
      for (double mu_r : {0.0, 0.1, 1.0}) {
        double x = next_gamma_pd3o(g, mu_f, mu_r, 0.15);
        CHECK(x > 0.0);
        CHECK(std::abs(pd3o_defining_residual(g, x, mu_f, mu_r, 0.15)) <
              1e-12);
      }
      if (mu_f > 0.0) {
        double x = next_gamma_pddy(g, mu_f, 0.15);
        CHECK(x > 0.0);
        CHECK(std::abs(pddy_defining_residual(g, x, mu_f, 0.15)) < 1e-12);
      }
    }
  }
}

TEST_CASE("gamma_1 equals gamma_0 and the sequence is nonincreasing") {
  Schedule s;
  s.kind = ScheduleKind::accel_pd3o;
  s.gamma0 = 1.7;
  s.kappa = 0.15;
  s.mu_f = 0.01;
  ScheduleIterator it(s);
  CHECK(it.current() == 1.7);
  CHECK(it.advance() == 1.7);  // gamma_1 = gamma_0
  double prev = 1.7;
  for (int k = 2; k <= 1000; ++k) {
    double g = it.advance();
    CHECK(g <= prev + 1e-15);
    CHECK(g > 0.0);
    prev = g;
  }
}

TEST_CASE("consecutive stepsize ratio tends to one") {
  Schedule s;
  s.kind = ScheduleKind::accel_pddy;
  s.gamma0 = 1.0;
  s.kappa = 0.5;
  s.mu_f = 0.2;
  ScheduleIterator it(s);
  double g = it.current();
  for (long k = 1; k <= 100000; ++k) g = it.advance();
  double g_next = s.next(g);
  CHECK(g_next / g == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("k gamma_k approaches the predicted asymptote") {
  {
    Schedule s;
    s.kind = ScheduleKind::accel_pd3o;
    s.gamma0 = 1.7;
    s.kappa = 0.15;
    s.mu_f = 0.01;
    s.mu_r = 0.0;
    CHECK(std::abs(asymptote_check(s, 100000) - 1.0) <= 0.01);
  }
  {
    Schedule s;
    s.kind = ScheduleKind::accel_pd3o;
    s.gamma0 = 0.1;
    s.kappa = 0.15;
    s.mu_f = 0.0;
    s.mu_r = 0.1;
    CHECK(std::abs(asymptote_check(s, 100000) - 1.0) <= 0.01);
  }
  {
    Schedule s;
    s.kind = ScheduleKind::accel_pddy;
    s.gamma0 = 1.0;
    s.kappa = 0.5;
    s.mu_f = 0.3;
    CHECK(std::abs(asymptote_check(s, 100000) - 1.0) <= 0.01);
  }
}

TEST_CASE("validation rules") {
  Schedule s;
  s.gamma0 = -1.0;
  CHECK_THROWS_AS(s.validate(1.0), std::invalid_argument);

  s.gamma0 = 2.5;  // >= 2/L with L = 1
  s.kind = ScheduleKind::constant;
  CHECK_THROWS_AS(s.validate(1.0), std::invalid_argument);
  s.validate(0.0);  // F = 0: any positive stepsize is fine

  s.kind = ScheduleKind::accel_pd3o;
  s.gamma0 = 1.7;
  s.kappa = 0.15;
  s.validate(1.0);  // the boundary value 2(1-kappa)/L is accepted
  s.gamma0 = 1.71;
  CHECK_THROWS_AS(s.validate(1.0), std::invalid_argument);
  s.gamma0 = 1.0;
  s.kappa = 1.5;
  CHECK_THROWS_AS(s.validate(1.0), std::invalid_argument);

  s.kind = ScheduleKind::accel_pddy;
  s.kappa = 0.15;
  s.mu_f = 0.0;
  CHECK_THROWS_AS(s.validate(1.0), std::invalid_argument);
  CHECK_THROWS_AS(next_gamma_pddy(1.0, 0.0, 0.5), std::invalid_argument);
}

TEST_CASE("schedule kind names round-trip") {
  for (auto k : {ScheduleKind::constant, ScheduleKind::accel_pd3o,
                 ScheduleKind::accel_pddy})
    CHECK(schedule_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(schedule_kind_from_string("bogus"), std::invalid_argument);
}
