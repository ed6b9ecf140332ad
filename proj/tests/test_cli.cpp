#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "proxsplit/config.hpp"
#include "proxsplit/experiment.hpp"
#include "proxsplit/rate.hpp"
#include "proxsplit/trace_io.hpp"

using namespace proxsplit;

namespace {

std::vector<TraceRecord> synthetic_trace(std::function<double(long)> f,
                                         long n) {
  std::vector<TraceRecord> t;
  for (long k = 1; k <= n; ++k) {
    TraceRecord r;
    r.k = k;
    r.gamma_k = 1.0;
    r.psi_gap = f(k);
    r.dist_sq = f(k);
    r.ergodic_gap = f(k);
    t.push_back(r);
  }
  return t;
}

int run_shell(const std::string& cmd) {
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("shortest round-trip double formatting") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 0.0, 1234567.875,
                   6.62607015e-34}) {
    std::string s = format_double(v);
    double back = std::strtod(s.c_str(), nullptr);
    CHECK(back == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("config serialization round-trips") {
  ExperimentConfig c;
  c.name = "roundtrip";
  c.problem = "deblur-huber";
  c.n = 32;
  c.lambda = 0.55;
  c.nu = 0.07;
  c.algorithm = "pddy";
  c.distributed = true;
  c.nodes = 4;
  c.engine = "parallel";
  c.sigma = 0.125;
  c.eta_override = 9.5;
  c.schedule = "accel_pddy";
  c.gamma0 = 1.3;
  c.kappa = 0.2;
  c.mu_f_override = 0.02;
  c.max_iter = 12345;
  c.tol = 1e-9;
  c.out = "some/trace.csv";
  c.cadence = 5;
  c.seed = 42;
  c.record_wall = true;
  c.data_path = "data/foo";
  std::string text = serialize_config(c);
  std::istringstream in(text);
  ExperimentConfig back = parse_config(in);
  CHECK(back == c);
}

TEST_CASE("config parser rejects malformed input") {
  auto parse = [](const std::string& body) {
    std::istringstream in(body);
    return parse_config(in);
  };
  CHECK_THROWS_AS(parse("[problem]\nunknown_key = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse("[problem]\nn = notanumber\n"), ConfigError);
  CHECK_THROWS_AS(parse("[problem\nn = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse("just a line\n"), ConfigError);
  CHECK_THROWS_AS(parse("[algorithm]\ndistributed = yes\n"), ConfigError);
  // comments and blank lines are fine
  ExperimentConfig c = parse("# header\n\n[problem]\nn = 48 # inline\n");
  CHECK(c.n == 48);
}

TEST_CASE("csv header is bit-exact and rows round-trip") {
  CHECK(std::string(kCsvHeader) ==
        "k,gamma_k,psi_gap,dist_sq,ergodic_gap,wall_ms,msgs,bytes,feasible");
  std::vector<TraceRecord> t = synthetic_trace(
      [](long k) { return 1.0 / (3.0 * k + 0.25); }, 40);
  t[5].feasible = false;
  t[7].msgs = 9;
  t[7].bytes = 720;
  std::ostringstream os;
  write_csv(os, t);
  std::istringstream is(os.str());
  auto back = read_csv(is);
  REQUIRE(back.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(back[i].k == t[i].k);
    CHECK(back[i].psi_gap == t[i].psi_gap);
    CHECK(back[i].feasible == t[i].feasible);
    CHECK(back[i].msgs == t[i].msgs);
    CHECK(back[i].bytes == t[i].bytes);
  }
  std::istringstream bad("wrong,header\n");
  CHECK_THROWS_AS(read_csv(bad), std::runtime_error);
  std::istringstream dup(std::string(kCsvHeader) +
                         "\n3,1,1,1,1,0,0,0,1\n2,1,1,1,1,0,0,0,1\n");
  CHECK_THROWS_AS(read_csv(dup), std::runtime_error);
}

TEST_CASE("rate estimator recovers planted decays") {
  auto quad = synthetic_trace([](long k) { return 1.0 / (k * double(k)); },
                              2000);
  RateEstimate e =
      estimate_rate(quad, TraceColumn::psi_gap, RateModel::powerlaw);
  CHECK(e.slope == doctest::Approx(-2.0).epsilon(0.005));
  CHECK(e.r_squared > 0.999);

  auto geo = synthetic_trace([](long k) { return std::pow(0.9, k); }, 300);
  RateEstimate g =
      estimate_rate(geo, TraceColumn::dist_sq, RateModel::linear_geometric);
  CHECK(g.factor == doctest::Approx(0.9).epsilon(0.001));
  CHECK(g.r_squared > 0.999);
}

TEST_CASE("rate estimator clips the machine-precision floor") {
  auto geo = synthetic_trace([](long k) { return std::pow(0.5, k); }, 200);
  // values dive below 1e-15 after k ~ 50; the fit window must stop there
  RateEstimate g =
      estimate_rate(geo, TraceColumn::dist_sq, RateModel::linear_geometric, 1,
                    200);
  CHECK(g.factor == doctest::Approx(0.5).epsilon(0.001));
  auto flat = synthetic_trace([](long) { return 1e-18; }, 100);
  CHECK_THROWS_AS(
      estimate_rate(flat, TraceColumn::dist_sq, RateModel::powerlaw),
      std::invalid_argument);
  CHECK_THROWS_AS(
      estimate_rate({}, TraceColumn::dist_sq, RateModel::powerlaw),
      std::invalid_argument);
}

TEST_CASE("forward-backward contraction matches (1 - gamma mu)^2") {
  // diagonal quadratic with exact mu = 0.5, L = 2, gamma = 1/(L + mu)
  std::size_t n = 6;
  std::vector<double> d = {0.5, 0.8, 1.1, 1.4, 1.7, 2.0};
  TermBundle b;
  b.dim = n;
  b.x_space = "q";
  SmoothTerm f;
  auto ds = std::make_shared<std::vector<double>>(d);
  f.value = [ds](const Vec& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      s += 0.5 * (*ds)[i] * x[i] * x[i];
    return s;
  };
  f.gradient = [ds](const Vec& x) {
    Vec g(x.size(), x.space);
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = (*ds)[i] * x[i];
    return g;
  };
  f.lipschitz_L = 2.0;
  f.strong_mu = 0.5;
  b.F = f;
  double gamma = 1.0 / (2.0 + 0.5);
  Schedule s;
  s.gamma0 = gamma;
  StoppingRule stop;
  stop.max_iter = 150;
  Probe probe;
  probe.x_star = Vec(n, "q");
  auto r = run(Algo::forward_backward, b, s, stop, probe, Vec(n, "q", 1.0));
  RateEstimate e = estimate_rate(r.trace, TraceColumn::dist_sq,
                                 RateModel::linear_geometric, 60, 150);
  double expected = (1.0 - gamma * 0.5) * (1.0 - gamma * 0.5);
  CHECK(e.factor == doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("quadratic reference matches the normal-equation solution") {
  ExperimentConfig c;
  c.problem = "quadratic";
  c.n = 20;
  c.seed = 3;
  c.cache_dir = "cache_cli_test";
  std::filesystem::remove_all(c.cache_dir);
  Reference ref = reference_solution(c);
  CHECK_FALSE(ref.from_cache);

  // regenerate the same A, b and solve A x = b by Gaussian elimination
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::size_t n = 20;
  std::vector<double> A(n * n);
  double scale = 0.5 / std::sqrt(20.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      A[i * n + j] = (i == j ? 1.0 : 0.0) + scale * gauss(rng);
  std::vector<double> rhs(n);
  for (auto& v : rhs) v = gauss(rng);
  for (std::size_t col = 0; col < n; ++col) {  // partial pivoting
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(A[r * n + col]) > std::abs(A[piv * n + col])) piv = r;
    for (std::size_t j = 0; j < n; ++j) std::swap(A[col * n + j], A[piv * n + j]);
    std::swap(rhs[col], rhs[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      double m = A[r * n + col] / A[col * n + col];
      for (std::size_t j = col; j < n; ++j) A[r * n + j] -= m * A[col * n + j];
      rhs[r] -= m * rhs[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t ri = n; ri-- > 0;) {
    double s = rhs[ri];
    for (std::size_t j = ri + 1; j < n; ++j) s -= A[ri * n + j] * x[j];
    x[ri] = s / A[ri * n + ri];
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    worst = std::max(worst, std::abs(ref.x_star[i] - x[i]));
  CHECK(worst < 1e-8);

  // cache hit returns bit-identical data
  Reference again = reference_solution(c);
  CHECK(again.from_cache);
  CHECK(max_abs_diff(again.x_star, ref.x_star) == 0.0);
  CHECK(again.psi_star == ref.psi_star);

  // corruption forces a recompute
  std::string file = c.cache_dir + "/" + reference_cache_key(c) + ".ref";
  std::ofstream(file) << "garbage";
  Reference fixed = reference_solution(c);
  CHECK_FALSE(fixed.from_cache);
  CHECK(max_abs_diff(fixed.x_star, ref.x_star) < 1e-12);
  std::filesystem::remove_all(c.cache_dir);
}

TEST_CASE("run_experiment writes deterministic CSV and a sidecar") {
  ExperimentConfig c;
  c.name = "quad-run";
  c.problem = "quadratic";
  c.n = 12;
  c.seed = 5;
  c.algorithm = "forward_backward";
  c.schedule = "constant";
  c.gamma0 = 0.3;
  c.max_iter = 300;
  c.out = "cli_test_quad.csv";
  c.cache_dir = "cache_cli_test2";
  std::filesystem::remove_all(c.cache_dir);
  ExperimentResult r1 = run_experiment(c);
  CHECK(r1.exit_code == 0);
  CHECK(r1.trace.size() == 300);
  std::ifstream f1(c.out);
  std::stringstream s1;
  s1 << f1.rdbuf();
  ExperimentResult r2 = run_experiment(c);
  std::ifstream f2(c.out);
  std::stringstream s2;
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
  CHECK(s1.str().substr(0, std::string(kCsvHeader).size()) == kCsvHeader);

  std::ifstream side(r1.sidecar_path);
  REQUIRE(side.good());
  std::stringstream sb;
  sb << side.rdbuf();
  CHECK(sb.str().find("\"psi_star\"") != std::string::npos);
  CHECK(sb.str().find("\"rates\"") != std::string::npos);
  std::filesystem::remove_all(c.cache_dir);
  std::filesystem::remove(c.out);
  std::filesystem::remove(r1.sidecar_path);
}

TEST_CASE("cli process exit codes") {
  CHECK(run_shell("./proxsplit --help > /dev/null 2>&1") == 0);
  CHECK(run_shell("./proxsplit run no_such_config.toml > /dev/null 2>&1") ==
        2);
  {
    std::ofstream bad("cli_bad_config.toml");
    bad << "[problem]\nbogus = 1\n";
  }
  CHECK(run_shell("./proxsplit run cli_bad_config.toml > /dev/null 2>&1") ==
        2);
  std::filesystem::remove("cli_bad_config.toml");

  auto t = synthetic_trace([](long k) { return 1.0 / k; }, 200);
  write_csv_file("cli_rate_input.csv", t);
  CHECK(run_shell("./proxsplit rate cli_rate_input.csv --column psi_gap "
                  "--model powerlaw > /dev/null 2>&1") == 0);
  CHECK(run_shell("./proxsplit rate cli_rate_input.csv --column nope "
                  "> /dev/null 2>&1") == 2);
  std::filesystem::remove("cli_rate_input.csv");
}
