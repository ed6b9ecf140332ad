#pragma once

#include <chrono>
#include <optional>
#include <stdexcept>
#include <vector>

#include "proxsplit/linear_map.hpp"
#include "proxsplit/schedules.hpp"
#include "proxsplit/terms.hpp"

namespace proxsplit {

enum class Algo {
  davis_yin,
  pd3o,
  pddy,
  chambolle_pock_i,
  chambolle_pock_ii,
  loris_verhoeven,
  douglas_rachford,
  forward_backward,
  condat_vu_i,
  condat_vu_ii,
};

inline std::string to_string(Algo a) {
  switch (a) {
    case Algo::davis_yin: return "davis_yin";
    case Algo::pd3o: return "pd3o";
    case Algo::pddy: return "pddy";
    case Algo::chambolle_pock_i: return "cp1";
    case Algo::chambolle_pock_ii: return "cp2";
    case Algo::loris_verhoeven: return "loris_verhoeven";
    case Algo::douglas_rachford: return "douglas_rachford";
    case Algo::forward_backward: return "forward_backward";
    case Algo::condat_vu_i: return "condat_vu_1";
    case Algo::condat_vu_ii: return "condat_vu_2";
  }
  return "?";
}

inline Algo algo_from_string(const std::string& s) {
  if (s == "davis_yin") return Algo::davis_yin;
  if (s == "pd3o") return Algo::pd3o;
  if (s == "pddy") return Algo::pddy;
  if (s == "cp1") return Algo::chambolle_pock_i;
  if (s == "cp2") return Algo::chambolle_pock_ii;
  if (s == "loris_verhoeven") return Algo::loris_verhoeven;
  if (s == "douglas_rachford") return Algo::douglas_rachford;
  if (s == "forward_backward") return Algo::forward_backward;
  if (s == "condat_vu_1") return Algo::condat_vu_i;
  if (s == "condat_vu_2") return Algo::condat_vu_ii;
  throw std::invalid_argument("unknown algorithm: " + s);
}

/// Problem triple F + R + H(K.) with the dual-space bound eta >= ||K||^2.
/// Absent F means F = 0; absent K means K = I.
struct TermBundle {
  std::optional<SmoothTerm> F;
  std::optional<ProxTerm> R;
  std::optional<ProxTerm> H;
  std::optional<LinearMap> K;
  double eta = 1.0;
  std::size_t dim = 0;
  std::string x_space;

  std::string u_space() const { return K ? K->out_space : x_space; }
  std::size_t u_dim() const { return K ? K->out_dim : dim; }

  Vec apply_K(const Vec& x) const { return K ? K->apply(x) : x; }
  Vec apply_Kt(const Vec& u) const { return K ? K->adjoint(u) : u; }

  double f_value(const Vec& x) const { return F ? F->value(x) : 0.0; }
  Vec grad_F(const Vec& x) const {
    return F ? F->gradient(x) : Vec(x.size(), x.space);
  }
  double lipschitz_L() const { return F ? F->lipschitz_L : 0.0; }

  Vec prox_R(double gamma, const Vec& z) const {
    return R ? R->prox(gamma, z) : z;
  }
  Vec prox_H(double gamma, const Vec& z) const {
    return H ? H->prox(gamma, z) : z;
  }
  /// prox_{H*/tau}
  Vec prox_H_conj(double tau, const Vec& z) const {
    if (!H) return Vec(z.size(), z.space);  // H = 0 => H* indicator of {0}
    return prox_conjugate(*H, tau, z);
  }
};

struct PsiValue {
  double finite = 0.0;   // finite part of the objective
  bool feasible = true;  // false when an indicator returned +inf
};

inline PsiValue psi(const TermBundle& b, const Vec& x) {
  PsiValue out;
  out.finite = b.f_value(x);
  if (b.R) {
    double r = b.R->value(x);
    if (r == kInf) out.feasible = false; else out.finite += r;
  }
  if (b.H) {
    double h = b.H->value(b.apply_K(x));
    if (h == kInf) out.feasible = false; else out.finite += h;
  }
  return out;
}

/// Per-algorithm iterate tuple. Only the fields the algorithm uses are
/// kept populated; see the init_* functions.
struct SolverState {
  Algo algo = Algo::pd3o;
  long k = 0;
  Vec x;    // last primal iterate (prox_R output for most algorithms)
  Vec x_h;  // DY auxiliary
  Vec x_r;  // PDDY / CP-II feasible iterate
  Vec s;    // DR / DY meta-variable
  Vec q;    // PD3O / LV
  Vec u;    // dual
  Vec p;    // PDDY / CP-II cached K* u
  double sigma = 0.0;  // Condat-Vu dual stepsize

  /// The iterate convergence statements are about; feasible w.r.t. R.
  const Vec& primary() const {
    switch (algo) {
      case Algo::pddy:
      case Algo::chambolle_pock_ii: return x_r;
      default: return x;
    }
  }
};

// ---- initialization -------------------------------------------------------

inline SolverState init_state(Algo algo, const TermBundle& b, const Vec& x0,
                              double gamma0, std::optional<Vec> u0 = {},
                              double sigma = 0.0) {
  SolverState st;
  st.algo = algo;
  st.sigma = sigma;
  Vec u = u0 ? *u0 : Vec(b.u_dim(), b.u_space());
  switch (algo) {
    case Algo::davis_yin:
      if (b.K) throw std::invalid_argument("davis_yin requires K = I (absent)");
      st.x_h = x0;
      st.u = u0 ? *u0 : Vec(b.dim, b.x_space);
      break;
    case Algo::pd3o:
    case Algo::loris_verhoeven: {
      st.q = (1.0 / gamma0) * Vec(x0);
      st.q -= b.grad_F(x0);
      st.u = u;
      break;
    }
    case Algo::pddy:
    case Algo::chambolle_pock_ii:
      st.x_r = x0;
      st.u = u;
      st.p = b.apply_Kt(st.u);
      break;
    case Algo::chambolle_pock_i:
    case Algo::condat_vu_i:
    case Algo::condat_vu_ii:
      st.x = x0;
      st.u = u;
      break;
    case Algo::douglas_rachford:
      st.s = x0;
      break;
    case Algo::forward_backward:
      st.x = x0;
      break;
  }
  return st;
}

// ---- per-iteration steps (verbatim algorithm boxes) -----------------------

inline void davis_yin_step(SolverState& st, const TermBundle& b, double gk,
                           double gk1) {
  Vec arg = st.x_h;
  arg.axpy(gk, st.u);
  st.x = b.prox_R(gk, arg);
  st.u.axpy(1.0 / gk, st.x_h - st.x);
  Vec zh = st.x;
  zh.axpy(-gk1, st.u);
  zh.axpy(-gk1, b.grad_F(st.x));
  st.x_h = b.prox_H(gk1, zh);
}

inline void pd3o_step(SolverState& st, const TermBundle& b, double gk,
                      double gk1) {
  Vec arg = st.q - b.apply_Kt(st.u);
  arg *= gk;
  st.x = b.prox_R(gk, arg);
  Vec q_next = (1.0 / gk1) * Vec(st.x);
  q_next -= b.grad_F(st.x);
  Vec inner = (1.0 / gk) * Vec(st.x);
  inner += q_next;
  inner -= st.q;
  Vec uarg = st.u;
  uarg.axpy(1.0 / b.eta, b.apply_K(inner));
  st.u = b.prox_H_conj(gk1 * b.eta, uarg);
  st.q = std::move(q_next);
}

inline void pddy_step(SolverState& st, const TermBundle& b, double gk,
                      double gk1) {
  Vec uarg = st.u;
  uarg.axpy(1.0 / (gk * b.eta), b.apply_K(st.x_r));
  st.u = b.prox_H_conj(gk * b.eta, uarg);
  Vec p_next = b.apply_Kt(st.u);
  st.x = st.x_r;
  st.x.axpy(-gk, p_next - st.p);
  st.p = std::move(p_next);
  Vec zr = st.x;
  zr.axpy(-gk1, b.grad_F(st.x));
  zr.axpy(-gk1, st.p);
  st.x_r = b.prox_R(gk1, zr);
}

inline void chambolle_pock_i_step(SolverState& st, const TermBundle& b,
                                  double gk, double gk1) {
  Vec arg = st.x;
  arg.axpy(-gk, b.apply_Kt(st.u));
  Vec x_next = b.prox_R(gk, arg);
  Vec inner = (1.0 / gk1 + 1.0 / gk) * Vec(x_next);
  inner.axpy(-1.0 / gk, st.x);
  Vec uarg = st.u;
  uarg.axpy(1.0 / b.eta, b.apply_K(inner));
  st.u = b.prox_H_conj(gk1 * b.eta, uarg);
  st.x = std::move(x_next);
}

inline void chambolle_pock_ii_step(SolverState& st, const TermBundle& b,
                                   double gk, double gk1) {
  Vec uarg = st.u;
  uarg.axpy(1.0 / (gk * b.eta), b.apply_K(st.x_r));
  Vec u_next = b.prox_H_conj(gk * b.eta, uarg);
  Vec p_next = b.apply_Kt(u_next);
  st.x = st.x_r;
  st.x.axpy(-gk, p_next - st.p);  // retrievable x^{k+1}
  Vec arg = st.x_r;
  arg.axpy(-(gk + gk1), p_next);
  arg.axpy(gk, st.p);
  st.x_r = b.prox_R(gk1, arg);
  st.u = std::move(u_next);
  st.p = std::move(p_next);
}

inline void loris_verhoeven_step(SolverState& st, const TermBundle& b,
                                 double gk, double gk1) {
  st.x = st.q - b.apply_Kt(st.u);
  st.x *= gk;
  Vec q_next = (1.0 / gk1) * Vec(st.x);
  q_next -= b.grad_F(st.x);
  Vec inner = (1.0 / gk) * Vec(st.x);
  inner += q_next;
  inner -= st.q;
  Vec uarg = st.u;
  uarg.axpy(1.0 / b.eta, b.apply_K(inner));
  st.u = b.prox_H_conj(gk1 * b.eta, uarg);
  st.q = std::move(q_next);
}

inline void douglas_rachford_step(SolverState& st, const TermBundle& b,
                                  double gk, double gk1) {
  st.x = b.prox_R(gk, st.s);
  double r = gk1 / gk;
  Vec arg = (1.0 + r) * Vec(st.x);
  arg.axpy(-r, st.s);
  st.x_h = b.prox_H(gk1, arg);
  Vec s_next = st.x_h;
  s_next.axpy(r, st.s - st.x);
  st.s = std::move(s_next);
}

inline void forward_backward_step(SolverState& st, const TermBundle& b,
                                  double gk, double /*gk1*/) {
  Vec arg = st.x;
  arg.axpy(-gk, b.grad_F(st.x));
  st.x = b.prox_R(gk, arg);
}

/// Constant-stepsize Condat-Vu, forms I and II (the M = 1 case of the
/// distributed boxes). sigma is the dual stepsize.
inline void condat_vu_step(SolverState& st, const TermBundle& b, double gamma,
                           double sigma, bool form_ii) {
  if (gamma <= 0.0 || sigma <= 0.0)
    throw std::invalid_argument("condat_vu: nonpositive stepsize");
  if (!form_ii) {
    Vec arg = st.x;
    arg.axpy(-gamma, b.apply_Kt(st.u));
    arg.axpy(-gamma, b.grad_F(st.x));
    Vec x_next = b.prox_R(gamma, arg);
    Vec inner = 2.0 * Vec(x_next);
    inner -= st.x;
    Vec uarg = st.u;
    uarg.axpy(sigma, b.apply_K(inner));
    st.u = b.prox_H_conj(1.0 / sigma, uarg);
    st.x = std::move(x_next);
  } else {
    Vec uarg = st.u;
    uarg.axpy(sigma, b.apply_K(st.x));
    Vec u_next = b.prox_H_conj(1.0 / sigma, uarg);
    Vec d = 2.0 * Vec(u_next);
    d -= st.u;
    Vec arg = st.x;
    arg.axpy(-gamma, b.apply_Kt(d));
    arg.axpy(-gamma, b.grad_F(st.x));
    st.x = b.prox_R(gamma, arg);
    st.u = std::move(u_next);
  }
}

/// Checks the Condat-Vu convergence condition gamma (sigma eta + L_F/2) < 1.
inline bool condat_vu_condition_ok(const TermBundle& b, double gamma,
                                   double sigma) {
  double knorm = b.K ? b.K->norm_sq_bound : 1.0;
  return gamma * (sigma * knorm + b.lipschitz_L() / 2.0) < 1.0;
}

inline void step(SolverState& st, const TermBundle& b, double gk, double gk1) {
  switch (st.algo) {
    case Algo::davis_yin: davis_yin_step(st, b, gk, gk1); break;
    case Algo::pd3o: pd3o_step(st, b, gk, gk1); break;
    case Algo::pddy: pddy_step(st, b, gk, gk1); break;
    case Algo::chambolle_pock_i: chambolle_pock_i_step(st, b, gk, gk1); break;
    case Algo::chambolle_pock_ii: chambolle_pock_ii_step(st, b, gk, gk1); break;
    case Algo::loris_verhoeven: loris_verhoeven_step(st, b, gk, gk1); break;
    case Algo::douglas_rachford: douglas_rachford_step(st, b, gk, gk1); break;
    case Algo::forward_backward: forward_backward_step(st, b, gk, gk1); break;
    case Algo::condat_vu_i: condat_vu_step(st, b, gk, st.sigma, false); break;
    case Algo::condat_vu_ii: condat_vu_step(st, b, gk, st.sigma, true); break;
  }
  ++st.k;
}

// ---- run loop -------------------------------------------------------------

struct StoppingRule {
  long max_iter = 1000;
  double tol = 0.0;  // on relative iterate change
  std::optional<double> wall_limit_ms;
};

struct TraceRecord {
  long k = 0;
  double gamma_k = 0.0;
  double psi_gap = 0.0;
  double dist_sq = 0.0;
  double ergodic_gap = 0.0;
  double wall_ms = 0.0;
  long msgs = 0;
  long bytes = 0;
  bool feasible = true;
};

struct DivergenceError : std::runtime_error {
  long iteration;
  std::vector<TraceRecord> partial;  // trace up to the failure
  explicit DivergenceError(long k, std::vector<TraceRecord> trace = {})
      : std::runtime_error("divergence (NaN/Inf) at iteration " +
                           std::to_string(k)),
        iteration(k),
        partial(std::move(trace)) {}
};

/// What the run loop measures at every probed iteration.
struct Probe {
  std::optional<Vec> x_star;
  double psi_star = 0.0;
  long cadence = 1;  // record every cadence-th iteration
};

/// Weighted ergodic average xbar^k = 2/(k(k+1)) sum i x^i, kept as a
/// running sum by the run loop.
class ErgodicAccumulator {
 public:
  void add(const Vec& x) {
    ++k_;
    if (sum_.size() == 0) sum_ = Vec(x.size(), x.space);
    sum_.axpy(static_cast<double>(k_), x);
  }
  long count() const { return k_; }
  Vec average() const {
    if (k_ < 1) throw std::invalid_argument("ergodic average of empty trace");
    double w = 2.0 / (static_cast<double>(k_) * (k_ + 1.0));
    return w * Vec(sum_);
  }

 private:
  Vec sum_;
  long k_ = 0;
};

inline Vec ergodic_average(const std::vector<Vec>& iterates) {
  ErgodicAccumulator acc;
  for (const auto& x : iterates) acc.add(x);
  return acc.average();
}

struct RunResult {
  std::vector<TraceRecord> trace;
  SolverState state;
};

inline RunResult run(Algo algo, const TermBundle& b, const Schedule& sched,
                     const StoppingRule& stop, const Probe& probe,
                     const Vec& x0, std::optional<Vec> u0 = {},
                     double sigma = 0.0) {
  sched.validate(b.lipschitz_L());
  bool is_cv = (algo == Algo::condat_vu_i || algo == Algo::condat_vu_ii);
  if (is_cv && sched.kind != ScheduleKind::constant)
    throw std::invalid_argument("condat_vu supports constant stepsizes only");
  SolverState st = init_state(algo, b, x0, sched.gamma0, std::move(u0), sigma);

  RunResult out;
  out.trace.reserve(static_cast<std::size_t>(stop.max_iter / probe.cadence + 1));
  ScheduleIterator gammas(sched);
  ErgodicAccumulator ergodic;
  Vec prev = x0;
  auto t0 = std::chrono::steady_clock::now();

  for (long k = 0; k < stop.max_iter; ++k) {
    double gk = gammas.current();
    double gk1 = gammas.advance();
    step(st, b, gk, gk1);
    const Vec& xk = st.primary();
    if (!xk.all_finite()) throw DivergenceError(st.k, std::move(out.trace));
    ergodic.add(xk);

    auto now = std::chrono::steady_clock::now();
    double wall =
        std::chrono::duration<double, std::milli>(now - t0).count();
    if ((st.k % probe.cadence) == 0 || k + 1 == stop.max_iter) {
      TraceRecord rec;
      rec.k = st.k;
      rec.gamma_k = gk;
      rec.wall_ms = wall;
      PsiValue pv = psi(b, xk);
      rec.psi_gap = pv.finite - probe.psi_star;
      rec.feasible = pv.feasible;
      if (probe.x_star) {
        rec.dist_sq = dist_sq(xk, *probe.x_star);
        PsiValue pe = psi(b, ergodic.average());
        rec.ergodic_gap = pe.finite - probe.psi_star;
      }
      out.trace.push_back(rec);
    }
    if (stop.tol > 0.0) {
      double rel = std::sqrt(dist_sq(xk, prev)) / (norm(prev) + 1e-15);
      if (rel < stop.tol) break;
    }
    prev = xk;
    if (stop.wall_limit_ms && wall > *stop.wall_limit_ms) break;
  }
  out.state = std::move(st);
  return out;
}

}  // namespace proxsplit
