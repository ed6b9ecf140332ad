#include "proxsplit/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "proxsplit/trace_io.hpp"

namespace proxsplit {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- problem construction -------------------------------------------------

namespace {

SmoothTerm quadratic_F(long n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::size_t nn = static_cast<std::size_t>(n);
  std::vector<double> a(nn * nn);
  double scale = 0.5 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < nn; ++i)
    for (std::size_t j = 0; j < nn; ++j)
      a[i * nn + j] = (i == j ? 1.0 : 0.0) + scale * gauss(rng);
  std::string sp = "quad" + std::to_string(n);
  LinearMap A = dense_map(std::move(a), nn, nn, sp, sp, 0.0);
  double L = power_iteration_norm_sq(A).raw * 1.001;
  Vec b(nn, sp);
  for (auto& v : b.data) v = gauss(rng);
  SmoothTerm f;
  f.value = [A, b](const Vec& x) {
    Vec r = A.apply(x);
    r -= b;
    return 0.5 * norm_sq(r);
  };
  f.gradient = [A, b](const Vec& x) {
    Vec r = A.apply(x);
    r -= b;
    return A.adjoint(r);
  };
  f.lipschitz_L = L;
  return f;
}

LiftedProblem lift_shared(const TermBundle& b, long M) {
  LiftedProblem lp;
  lp.dim = b.dim;
  lp.x_space = b.x_space;
  lp.R = b.R;
  for (long m = 0; m < M; ++m) {
    NodeSpec n;
    n.index = static_cast<int>(m);
    n.F = b.F;
    n.H = b.H;
    n.K = b.K;
    n.omega = 1.0 / static_cast<double>(M);
    lp.nodes.push_back(std::move(n));
  }
  lp.eta = b.eta;
  lp.L_hat = compute_L_hat(lp.nodes, LiftFamily::pd3o_like);
  lp.K_hat_norm_sq =
      compute_K_hat_norm_sq(lp.nodes, LiftFamily::pd3o_like, true);
  lp.mu_F_hat = b.F ? b.F->strong_mu : 0.0;
  lp.mu_R = 0.0;
  return lp;
}

}  // namespace

BuiltProblem build_problem(const ExperimentConfig& c) {
  BuiltProblem p;
  if (c.problem == "deblur-tv" || c.problem == "deblur-huber" ||
      c.problem == "deblur-nonneg") {
    bool huber = c.problem == "deblur-huber";
    DeblurProblem dp = make_deblur(static_cast<int>(c.n), huber, c.lambda,
                                   c.nu, c.noise_sigma, c.seed);
    if (c.problem == "deblur-nonneg") {
      dp.bundle.H.reset();
      dp.bundle.K.reset();
      dp.bundle.eta = 1.0;
    }
    if (c.eta_override) dp.bundle.eta = *c.eta_override;
    p.x0 = dp.y;
    p.prob_mu_f = c.mu_f;
    if (c.distributed) {
      p.lifted = lift_shared(dp.bundle, c.nodes);
    } else {
      p.bundle = std::move(dp.bundle);
    }
  } else if (c.problem == "svm-hinge-toy" ||
             c.problem == "svm-hinge-australian") {
    SvmDataset ds = c.problem == "svm-hinge-toy"
                        ? toy_svm_dataset(static_cast<std::size_t>(c.samples),
                                          static_cast<std::size_t>(c.features),
                                          c.seed)
                        : load_libsvm(c.data_path);
    LiftedProblem lp = make_svm_problem(ds, c.alpha);
    if (c.eta_override) lp.eta = *c.eta_override;
    p.x0 = Vec(lp.dim, lp.x_space);
    p.prob_mu_r = c.alpha;
    p.lifted = std::move(lp);
  } else if (c.problem == "quadratic") {
    TermBundle b;
    b.dim = static_cast<std::size_t>(c.n);
    b.x_space = "quad" + std::to_string(c.n);
    b.F = quadratic_F(c.n, c.seed);
    p.x0 = Vec(b.dim, b.x_space);
    p.bundle = std::move(b);
  } else {
    throw ConfigError("unknown problem kind: " + c.problem);
  }
  return p;
}

Schedule build_schedule(const ExperimentConfig& c, const BuiltProblem& p) {
  Schedule s;
  s.kind = schedule_kind_from_string(c.schedule);
  s.gamma0 = c.gamma0;
  s.kappa = c.kappa;
  s.mu_f = c.mu_f_override ? *c.mu_f_override : p.prob_mu_f;
  s.mu_r = c.mu_r_override ? *c.mu_r_override : p.prob_mu_r;
  return s;
}

// ---- reference solutions --------------------------------------------------

std::string reference_cache_key(const ExperimentConfig& c) {
  std::ostringstream os;
  os << c.problem << '|' << c.n << '|' << c.samples << '|' << c.features << '|'
     << format_double(c.lambda) << '|' << format_double(c.nu) << '|'
     << format_double(c.noise_sigma) << '|' << format_double(c.mu_f) << '|'
     << format_double(c.alpha) << '|' << c.data_path << '|' << c.seed;
  std::string s = os.str();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

bool load_reference(const std::string& path, Reference& ref) {
  std::ifstream in(path);
  if (!in) return false;
  std::string magic;
  int version = 0;
  std::size_t dim = 0;
  if (!(in >> magic >> version >> dim) || magic != "proxsplit-ref" ||
      version != 1 || dim == 0)
    return false;
  std::string space;
  if (!(in >> space)) return false;
  double psi = 0.0;
  if (!(in >> psi) || !std::isfinite(psi)) return false;
  Vec x(dim, space);
  for (std::size_t i = 0; i < dim; ++i)
    if (!(in >> x[i]) || !std::isfinite(x[i])) return false;
  ref.x_star = std::move(x);
  ref.psi_star = psi;
  ref.from_cache = true;
  return true;
}

void store_reference(const std::string& path, const Reference& ref) {
  fs::path target(path);
  fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    out << "proxsplit-ref 1 " << ref.x_star.size() << "\n"
        << ref.x_star.space << "\n"
        << format_double(ref.psi_star) << "\n";
    for (double v : ref.x_star.data) out << format_double(v) << "\n";
  }
  fs::rename(tmp, target);  // atomic on POSIX
}

Reference compute_reference(const ExperimentConfig& c) {
  ExperimentConfig pc = c;
  pc.distributed = false;  // references depend on the problem only
  BuiltProblem p;
  Reference ref;
  StoppingRule stop;
  Probe probe;  // no x_star yet

  if (c.problem == "quadratic") {
    p = build_problem(pc);
    Schedule s;
    s.gamma0 = 1.0 / p.bundle->lipschitz_L();
    stop.max_iter = 50000;
    stop.tol = 1e-15;
    auto r = run(Algo::forward_backward, *p.bundle, s, stop, probe, p.x0);
    ref.x_star = r.state.x;
  } else if (c.problem == "deblur-nonneg") {
    p = build_problem(pc);
    Schedule s;
    s.gamma0 = 1.0;
    stop.max_iter = 200000;
    stop.tol = 1e-15;
    auto r = run(Algo::forward_backward, *p.bundle, s, stop, probe, p.x0);
    ref.x_star = r.state.x;
  } else if (c.problem == "deblur-huber") {
    p = build_problem(pc);
    Schedule s;
    s.gamma0 = 1.0;
    stop.max_iter = 400000;
    stop.tol = 1e-15;
    auto r = run(Algo::pd3o, *p.bundle, s, stop, probe, p.x0);
    ref.x_star = r.state.x;
  } else if (c.problem == "deblur-tv") {
    p = build_problem(pc);
    Schedule s;
    s.kind = ScheduleKind::accel_pd3o;
    s.gamma0 = 1.6;
    s.kappa = 0.15;
    s.mu_f = c.mu_f;
    stop.max_iter = 100000;
    Vec x = p.x0;
    std::optional<Vec> u;
    for (int seg = 0; seg < 3; ++seg) {  // warm restarts of the accelerated run
      auto r = run(Algo::pd3o, *p.bundle, s, stop, probe, x, u);
      x = r.state.x;
      u = r.state.u;
    }
    ref.x_star = std::move(x);
  } else if (c.problem == "svm-hinge-toy" ||
             c.problem == "svm-hinge-australian") {
    p = build_problem(pc);
    Schedule s;
    s.kind = ScheduleKind::accel_pd3o;
    s.gamma0 = 0.1;
    s.kappa = 0.15;
    s.mu_r = c.alpha;
    stop.max_iter = 150000;
    Vec x = p.x0;
    for (int seg = 0; seg < 3; ++seg) {
      auto r = simulate(DistAlgo::douglas_rachford, *p.lifted, s, stop, probe,
                        x);
      x = r.state.x;
    }
    ref.x_star = std::move(x);
  } else {
    throw ConfigError("no reference strategy for problem: " + c.problem);
  }

  if (p.bundle)
    ref.psi_star = psi(*p.bundle, ref.x_star).finite;
  else
    ref.psi_star = p.lifted->psi(ref.x_star).finite;
  return ref;
}

}  // namespace

Reference reference_solution(const ExperimentConfig& c) {
  std::string key = reference_cache_key(c);
  fs::path path = fs::path(c.cache_dir) / (key + ".ref");
  Reference ref;
  if (fs::exists(path)) {
    if (load_reference(path.string(), ref)) return ref;
    std::cerr << "warning: corrupt reference cache entry " << path
              << ", recomputing\n";
  }
  ref = compute_reference(c);
  ref.from_cache = false;
  store_reference(path.string(), ref);
  return ref;
}

// ---- experiment driver ----------------------------------------------------

namespace {

DistAlgo dist_algo_from_algo(Algo a) {
  switch (a) {
    case Algo::davis_yin: return DistAlgo::davis_yin;
    case Algo::pd3o: return DistAlgo::pd3o;
    case Algo::pddy: return DistAlgo::pddy;
    case Algo::chambolle_pock_i: return DistAlgo::chambolle_pock_i;
    case Algo::chambolle_pock_ii: return DistAlgo::chambolle_pock_ii;
    case Algo::loris_verhoeven: return DistAlgo::loris_verhoeven;
    case Algo::douglas_rachford: return DistAlgo::douglas_rachford;
    case Algo::forward_backward: return DistAlgo::forward_backward;
    case Algo::condat_vu_i: return DistAlgo::condat_vu_i;
    case Algo::condat_vu_ii: return DistAlgo::condat_vu_ii;
  }
  throw ConfigError("bad algorithm");
}

json rate_json(const std::vector<TraceRecord>& trace, TraceColumn col,
               RateModel model) {
  try {
    RateEstimate e = estimate_rate(trace, col, model);
    json j;
    j["model"] = to_string(model);
    j["slope"] = e.slope;
    if (model == RateModel::linear_geometric) j["factor"] = e.factor;
    j["r_squared"] = e.r_squared;
    j["window"] = {e.k_lo, e.k_hi};
    return j;
  } catch (const std::exception& ex) {
    return json{{"error", ex.what()}};
  }
}

/// The accelerated-rate constant, computable when H = 0 (then u* = 0).
std::optional<double> c0_constant(const ExperimentConfig& c,
                                  const BuiltProblem& p, const Schedule& s,
                                  Algo algo, const Reference& ref) {
  if (!p.bundle || p.bundle->H) return {};
  if (s.kind != ScheduleKind::accel_pd3o) return {};
  if (algo != Algo::pd3o && algo != Algo::loris_verhoeven) return {};
  SolverState st = init_state(algo, *p.bundle, p.x0, s.gamma0);
  Vec q0 = st.q;
  step(st, *p.bundle, s.gamma0, s.gamma0);
  const Vec& x1 = st.x;
  double g0 = s.gamma0;
  double a = (1.0 - g0 * s.mu_f * s.kappa) / (g0 * g0) *
             dist_sq(x1, ref.x_star);
  Vec r = q0;
  r.axpy(-1.0 / g0, x1);
  r += p.bundle->grad_F(ref.x_star);
  return a + norm_sq(r);
}

/// The linear-rate lower bound from the constant-stepsize remark.
std::optional<double> rho_lower_bound(const ExperimentConfig& c,
                                      const BuiltProblem& p, const Schedule& s,
                                      Algo algo) {
  if (!p.bundle || s.kind != ScheduleKind::constant) return {};
  if (!p.bundle->F || p.bundle->F->strong_mu <= 0.0) return {};
  double g = s.gamma0, mu = p.bundle->F->strong_mu;
  if (algo == Algo::forward_backward) return g * mu * (2.0 - g * mu);
  if (algo == Algo::pddy || algo == Algo::loris_verhoeven) {
    double lh = p.bundle->H ? p.bundle->H->smooth_L : 0.0;
    if (p.bundle->H && lh < 0.0) return {};  // H not smooth
    double denom = 1.0 + g * p.bundle->eta * lh;
    return g * mu * (2.0 - g * p.bundle->F->lipschitz_L) / (denom * denom);
  }
  return {};
}

void emit_gnuplot_script(const std::string& csv_path,
                         const std::string& gp_path) {
  std::ofstream gp(gp_path);
  gp << "set datafile separator ','\n"
     << "set logscale xy\n"
     << "set xlabel 'iteration k'\n"
     << "set key bottom left\n"
     << "clip(v) = (v > 1e-15 ? v : 1/0)\n"
     << "plot '" << csv_path << "' using 1:(clip($3)) with lines title "
     << "'objective gap', \\\n"
     << "     '" << csv_path << "' using 1:(clip($4)) with lines title "
     << "'distance squared', \\\n"
     << "     '" << csv_path << "' using 1:(clip($5)) with lines title "
     << "'ergodic gap'\n";
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& c) {
  BuiltProblem p = build_problem(c);
  Schedule sched = build_schedule(c, p);
  Algo algo = algo_from_string(c.algorithm);
  Reference ref = reference_solution(c);

  Probe probe;
  probe.x_star = ref.x_star;
  probe.psi_star = ref.psi_star;
  probe.cadence = c.cadence;
  StoppingRule stop;
  stop.max_iter = c.max_iter;
  stop.tol = c.tol;

  ExperimentResult res;
  res.csv_path = c.out;
  bool is_cv = (algo == Algo::condat_vu_i || algo == Algo::condat_vu_ii);
  if (is_cv && c.sigma <= 0.0)
    throw ConfigError("condat_vu needs a positive algorithm.sigma");
  try {
    if (c.distributed) {
      EngineMode mode = c.engine == "parallel" ? EngineMode::parallel_workers
                                               : EngineMode::sequential;
      auto r = simulate(dist_algo_from_algo(algo), *p.lifted, sched, stop,
                        probe, p.x0, mode, nullptr, c.sigma);
      res.trace = std::move(r.trace);
    } else {
      auto r = run(algo, *p.bundle, sched, stop, probe, p.x0, {}, c.sigma);
      res.trace = std::move(r.trace);
    }
  } catch (const DivergenceError& e) {
    res.trace = e.partial;
    res.exit_code = 1;
  }

  write_csv_file(c.out, res.trace, c.record_wall);

  json side;
  side["name"] = c.name;
  side["config"] = serialize_config(c);
  side["parameters"] = {
      {"problem", c.problem},     {"algorithm", c.algorithm},
      {"schedule", c.schedule},   {"gamma0", c.gamma0},
      {"kappa", c.kappa},         {"lambda", c.lambda},
      {"nu", c.nu},               {"alpha", c.alpha},
      {"mu_f", sched.mu_f},       {"mu_r", sched.mu_r},
      {"sigma", c.sigma},         {"seed", c.seed},
      {"eta", p.bundle ? p.bundle->eta : p.lifted->eta},
  };
  side["reference"] = {{"psi_star", ref.psi_star},
                       {"cache_key", reference_cache_key(c)},
                       {"from_cache", ref.from_cache}};
  json constants = json::object();
  if (auto c0 = c0_constant(c, p, sched, algo, ref)) constants["c0"] = *c0;
  if (auto rho = rho_lower_bound(c, p, sched, algo))
    constants["rho_lower_bound"] = *rho;
  side["constants"] = constants;
  json rates;
  rates["psi_gap"] =
      rate_json(res.trace, TraceColumn::psi_gap, RateModel::powerlaw);
  rates["dist_sq"] =
      rate_json(res.trace, TraceColumn::dist_sq, RateModel::powerlaw);
  rates["ergodic_gap"] =
      rate_json(res.trace, TraceColumn::ergodic_gap, RateModel::powerlaw);
  rates["dist_sq_geometric"] =
      rate_json(res.trace, TraceColumn::dist_sq, RateModel::linear_geometric);
  side["rates"] = rates;
  side["diverged"] = res.exit_code != 0;

  res.sidecar_path = c.out + ".json";
  {
    std::ofstream out(res.sidecar_path);
    out << side.dump(2) << "\n";
  }
  if (c.emit_gnuplot) emit_gnuplot_script(c.out, c.out + ".gp");
  return res;
}

// ---- theorem checks -------------------------------------------------------

namespace {

struct WindowedRate {
  std::optional<RateEstimate> est;
  std::string error;
};

WindowedRate try_rate(const std::vector<TraceRecord>& trace, TraceColumn col,
                      RateModel model, long lo = -1, long hi = -1) {
  WindowedRate w;
  try {
    w.est = estimate_rate(trace, col, model, lo, hi);
  } catch (const std::exception& e) {
    w.error = e.what();
  }
  return w;
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

std::vector<TheoremCheck> check_theorems(
    const std::vector<ExperimentConfig>& cs) {
  std::vector<TheoremCheck> out;
  for (const auto& c : cs) {
    std::vector<TraceRecord> trace;
    try {
      trace = read_csv_file(c.out);
    } catch (const std::exception&) {
      out.push_back({c.name, "trace at " + c.out, "missing", 2});
      continue;
    }
    long lo = std::max<long>(100, trace.front().k);
    long hi = std::min<long>(10000, trace.back().k);
    bool accel = c.schedule != "constant";

    if (c.problem == "deblur-huber" && !accel) {
      auto w = try_rate(trace, TraceColumn::dist_sq,
                        RateModel::linear_geometric);
      TheoremCheck t{c.name + ":linear", "factor < 1, r2 >= 0.99", "", 1};
      if (w.est) {
        t.measured = "factor " + fmt(w.est->factor) + ", r2 " +
                     fmt(w.est->r_squared);
        t.status = (w.est->factor < 1.0 && w.est->r_squared >= 0.99) ? 0 : 1;
      } else {
        t.measured = w.error;
        t.status = 2;
      }
      out.push_back(t);
      continue;
    }
    if (accel) {
      auto w = try_rate(trace, TraceColumn::dist_sq, RateModel::powerlaw, lo,
                        hi);
      TheoremCheck t{c.name + ":accel", "dist_sq slope <= -1.7", "", 1};
      if (w.est) {
        t.measured = "slope " + fmt(w.est->slope);
        t.status = w.est->slope <= -1.7 ? 0 : 1;
      } else {
        t.measured = w.error;
        t.status = 2;
      }
      out.push_back(t);
      continue;
    }
    double psi_bound =
        (c.problem == "deblur-nonneg" && c.algorithm == "forward_backward")
            ? -1.0
            : -0.5;
    {
      auto w = try_rate(trace, TraceColumn::psi_gap, RateModel::powerlaw, lo,
                        hi);
      TheoremCheck t{c.name + ":sublinear",
                     "psi_gap slope <= " + fmt(psi_bound), "", 1};
      if (w.est) {
        t.measured = "slope " + fmt(w.est->slope);
        t.status = w.est->slope <= psi_bound ? 0 : 1;
      } else {
        t.measured = w.error;
        t.status = 2;
      }
      out.push_back(t);
    }
    if (c.problem == "deblur-tv" &&
        (c.algorithm == "pd3o" || c.algorithm == "pddy")) {
      auto w = try_rate(trace, TraceColumn::ergodic_gap, RateModel::powerlaw,
                        lo, hi);
      TheoremCheck t{c.name + ":ergodic", "ergodic_gap slope <= -0.9", "", 1};
      if (w.est) {
        t.measured = "slope " + fmt(w.est->slope);
        t.status = w.est->slope <= -0.9 ? 0 : 1;
      } else {
        t.measured = w.error;
        t.status = 2;
      }
      out.push_back(t);
    }
  }
  return out;
}

std::string render_report(const std::vector<TheoremCheck>& checks) {
  std::ostringstream os;
  for (const auto& t : checks) {
    const char* tag = t.status == 0 ? "PASS" : (t.status == 1 ? "FAIL" : "SKIP");
    os << tag << "  " << t.name << "  [" << t.required << "]  " << t.measured
       << "\n";
  }
  return os.str();
}

}  // namespace proxsplit
