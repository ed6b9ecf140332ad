#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <mutex>
#include <numeric>
#include <optional>
#include <vector>

#include "proxsplit/checks.hpp"
#include "proxsplit/solvers.hpp"

namespace proxsplit {

/// One node of the product-space lifting: local F_m, H_m, K_m and the
/// consensus weight omega_m.
struct NodeSpec {
  int index = 0;
  std::optional<SmoothTerm> F;
  std::optional<ProxTerm> H;
  std::optional<LinearMap> K;  // absent => identity
  double omega = 1.0;
};

enum class LiftFamily { pd3o_like, pddy_like };

enum class DistAlgo {
  pd3o,
  pddy,
  davis_yin,
  chambolle_pock_i,
  chambolle_pock_ii,
  loris_verhoeven,
  douglas_rachford,
  forward_backward,
  condat_vu_i,
  condat_vu_ii,
};

inline std::string to_string(DistAlgo a) {
  switch (a) {
    case DistAlgo::pd3o: return "dist_pd3o";
    case DistAlgo::pddy: return "dist_pddy";
    case DistAlgo::davis_yin: return "dist_davis_yin";
    case DistAlgo::chambolle_pock_i: return "dist_cp1";
    case DistAlgo::chambolle_pock_ii: return "dist_cp2";
    case DistAlgo::loris_verhoeven: return "dist_loris_verhoeven";
    case DistAlgo::douglas_rachford: return "dist_douglas_rachford";
    case DistAlgo::forward_backward: return "dist_forward_backward";
    case DistAlgo::condat_vu_i: return "dist_condat_vu_1";
    case DistAlgo::condat_vu_ii: return "dist_condat_vu_2";
  }
  return "?";
}

/// Normalizes weights to sum 1; returns how much they changed.
inline double normalize_weights(std::vector<NodeSpec>& nodes) {
  double sum = 0.0;
  for (const auto& n : nodes) sum += n.omega;
  if (sum <= 0.0) throw std::invalid_argument("weights must be positive");
  double changed = 0.0;
  for (auto& n : nodes) {
    double w = n.omega / sum;
    changed = std::max(changed, std::abs(w - n.omega));
    n.omega = w;
  }
  return changed;
}

inline double compute_L_hat(const std::vector<NodeSpec>& nodes,
                            LiftFamily family) {
  double M = static_cast<double>(nodes.size());
  if (family == LiftFamily::pd3o_like) {
    double s = 0.0;
    for (const auto& n : nodes) {
      double L = n.F ? n.F->lipschitz_L : 0.0;
      s += L * L / n.omega;
    }
    return std::sqrt(s / (M * M));
  }
  double mx = 0.0;
  for (const auto& n : nodes) {
    double L = n.F ? n.F->lipschitz_L : 0.0;
    mx = std::max(mx, L / (M * n.omega));
  }
  return mx;
}

/// ||K_hat||^2 per the applicable rule: max_m ||K_m||^2 in general, or
/// ||sum_m omega_m K_m* K_m|| when the norm can be restricted to the
/// consensus subspace (shared/absent F_m, and always for Condat-Vu).
inline double compute_K_hat_norm_sq(const std::vector<NodeSpec>& nodes,
                                    LiftFamily family,
                                    bool restrict_to_consensus) {
  if (!restrict_to_consensus) {
    double mx = 0.0;
    for (const auto& n : nodes)
      mx = std::max(mx, n.K ? n.K->norm_sq_bound : 1.0);
    return mx;
  }
  (void)family;
  // power iteration on S(x) = sum_m omega_m K_m* K_m x
  std::size_t dim = 0;
  std::string space;
  for (const auto& n : nodes)
    if (n.K) {
      dim = n.K->in_dim;
      space = n.K->in_space;
      break;
    }
  if (dim == 0) return 1.0;  // all K_m identity
  LinearMap summed;
  summed.in_space = summed.out_space = space;
  summed.in_dim = summed.out_dim = dim;
  const auto* nd = &nodes;
  summed.apply = [nd, dim, space](const Vec& x) {
    Vec y(dim, space);
    for (const auto& n : *nd) {
      Vec t = n.K ? n.K->adjoint(n.K->apply(x)) : x;
      y.axpy(n.omega, t);
    }
    return y;
  };
  summed.adjoint = summed.apply;  // symmetric PSD
  // power iteration runs on S*S = S^2, so its estimate is ||S||^2 and the
  // consensus-restricted ||K_hat||^2 equals ||S|| = sqrt of it
  return std::sqrt(power_iteration_norm_sq(summed, 1e-13, 5000).raw);
}

/// Lifted problem: R at the master plus M node terms.
struct LiftedProblem {
  std::vector<NodeSpec> nodes;
  std::optional<ProxTerm> R;
  std::size_t dim = 0;
  std::string x_space;
  double eta = 1.0;        // >= K_hat_norm_sq
  double L_hat = 0.0;
  double K_hat_norm_sq = 1.0;
  double mu_F_hat = 0.0;   // strong convexity of the averaged smooth part
  double mu_R = 0.0;

  std::size_t M() const { return nodes.size(); }

  Vec node_K(std::size_t m, const Vec& x) const {
    return nodes[m].K ? nodes[m].K->apply(x) : x;
  }
  Vec node_Kt(std::size_t m, const Vec& u) const {
    return nodes[m].K ? nodes[m].K->adjoint(u) : u;
  }
  Vec node_grad(std::size_t m, const Vec& x) const {
    return nodes[m].F ? nodes[m].F->gradient(x) : Vec(x.size(), x.space);
  }
  std::size_t node_u_dim(std::size_t m) const {
    return nodes[m].K ? nodes[m].K->out_dim : dim;
  }
  std::string node_u_space(std::size_t m) const {
    return nodes[m].K ? nodes[m].K->out_space : x_space;
  }
  /// prox_{c H_m}(z)
  Vec node_prox_H(std::size_t m, double c, const Vec& z) const {
    return nodes[m].H ? nodes[m].H->prox(c, z) : z;
  }
  /// prox_{c H_m*}(z) = prox_{H_m*/(1/c)}(z)
  Vec node_prox_H_conj(std::size_t m, double c, const Vec& z) const {
    if (!nodes[m].H) return Vec(z.size(), z.space);
    return prox_conjugate(*nodes[m].H, 1.0 / c, z);
  }
  Vec prox_R_master(double gamma, const Vec& z) const {
    return R ? R->prox(gamma, z) : z;
  }

  PsiValue psi(const Vec& x) const {
    PsiValue out;
    if (R) {
      double r = R->value(x);
      if (r == kInf) out.feasible = false; else out.finite += r;
    }
    double s = 0.0;
    for (std::size_t m = 0; m < nodes.size(); ++m) {
      if (nodes[m].F) s += nodes[m].F->value(x);
      if (nodes[m].H) {
        double h = nodes[m].H->value(node_K(m, x));
        if (h == kInf) out.feasible = false; else s += h;
      }
    }
    out.finite += s / static_cast<double>(nodes.size());
    return out;
  }
};

/// One message of the master/worker protocol, for logging and tests.
struct RoundMessage {
  enum class Direction { broadcast, reduce };
  Direction direction;
  long round = 0;
  int node = -1;  // reduce only
  std::size_t payload_dim = 0;
};

struct DistState {
  DistAlgo algo = DistAlgo::pd3o;
  long k = 0;
  Vec x;                  // master iterate (x^k, or x_R^k for PDDY/CP-II)
  Vec x_prev;             // CP-I / CV / FB keep the previous master iterate
  std::vector<Vec> q, u, p, s, a;
  double sigma = 0.0;     // Condat-Vu
};

inline bool dist_algo_uses_eta(DistAlgo a) {
  switch (a) {
    case DistAlgo::pd3o:
    case DistAlgo::pddy:
    case DistAlgo::chambolle_pock_i:
    case DistAlgo::chambolle_pock_ii:
    case DistAlgo::loris_verhoeven: return true;
    default: return false;
  }
}

inline DistState init_dist_state(DistAlgo algo, const LiftedProblem& lp,
                                 const Vec& x0, double gamma0,
                                 const std::vector<Vec>* u0 = nullptr,
                                 double sigma = 0.0) {
  DistState st;
  st.algo = algo;
  st.sigma = sigma;
  std::size_t M = lp.M();
  double Md = static_cast<double>(M);
  auto dual0 = [&](std::size_t m) {
    return u0 ? (*u0)[m] : Vec(lp.node_u_dim(m), lp.node_u_space(m));
  };
  switch (algo) {
    case DistAlgo::pd3o:
    case DistAlgo::loris_verhoeven:
      st.q.resize(M);
      st.u.resize(M);
      st.a.resize(M);
      for (std::size_t m = 0; m < M; ++m) {
        st.u[m] = dual0(m);
        st.q[m] = (Md * lp.nodes[m].omega / gamma0) * Vec(x0);
        st.q[m] -= lp.node_grad(m, x0);
        st.a[m] = st.q[m] - lp.node_Kt(m, st.u[m]);
      }
      break;
    case DistAlgo::pddy:
    case DistAlgo::chambolle_pock_ii:
      st.x = x0;
      st.u.resize(M);
      st.p.resize(M);
      for (std::size_t m = 0; m < M; ++m) {
        st.u[m] = dual0(m);
        st.p[m] = lp.node_Kt(m, st.u[m]);
      }
      break;
    case DistAlgo::davis_yin:
    case DistAlgo::douglas_rachford:
      st.s.assign(M, x0);
      break;
    case DistAlgo::chambolle_pock_i:
      st.x = x0;
      st.u.resize(M);
      st.a.resize(M);
      for (std::size_t m = 0; m < M; ++m) {
        st.u[m] = dual0(m);
        st.a[m] = lp.node_Kt(m, st.u[m]);
      }
      break;
    case DistAlgo::condat_vu_i:
      st.x = x0;
      st.u.resize(M);
      st.a.resize(M);
      for (std::size_t m = 0; m < M; ++m) {
        st.u[m] = dual0(m);
        st.a[m] = lp.node_Kt(m, st.u[m]) + lp.node_grad(m, x0);
      }
      break;
    case DistAlgo::condat_vu_ii:
      st.x = x0;
      st.u.resize(M);
      for (std::size_t m = 0; m < M; ++m) st.u[m] = dual0(m);
      break;
    case DistAlgo::forward_backward:
      st.x = x0;
      break;
  }
  if (st.x.size() == 0) st.x = x0;
  return st;
}

enum class EngineMode { sequential, parallel_workers };

namespace detail {

/// Runs fn(m) for m in [0,M), either inline or on worker threads.
/// Results land in per-node slots, so any interleaving is deterministic.
template <typename Fn>
void for_each_node(std::size_t M, EngineMode mode, Fn&& fn) {
  if (mode == EngineMode::sequential || M <= 1) {
    for (std::size_t m = 0; m < M; ++m) fn(m);
    return;
  }
  std::vector<std::future<void>> futs;
  futs.reserve(M);
  for (std::size_t m = 0; m < M; ++m)
    futs.push_back(std::async(std::launch::async, [&fn, m] { fn(m); }));
  for (auto& f : futs) f.get();
}

}  // namespace detail

/// One master+workers round of the chosen algorithm. Reductions are
/// accumulated in ascending node order, so traces do not depend on
/// worker scheduling. Appends the round's messages to msgs if given.
inline void distributed_round(DistState& st, const LiftedProblem& lp,
                              double gk, double gk1,
                              EngineMode mode = EngineMode::sequential,
                              std::vector<RoundMessage>* msgs = nullptr) {
  std::size_t M = lp.M();
  double Md = static_cast<double>(M);
  double eta = lp.eta;
  std::mutex msg_mutex;  // workers may log concurrently
  auto log_broadcast = [&](std::size_t dim) {
    if (msgs)
      msgs->push_back({RoundMessage::Direction::broadcast, st.k, -1, dim});
  };
  auto log_reduce = [&](int m, std::size_t dim) {
    if (msgs) {
      std::lock_guard<std::mutex> lock(msg_mutex);
      msgs->push_back({RoundMessage::Direction::reduce, st.k, m, dim});
    }
  };
  auto reduce_mean = [&](const std::vector<Vec>& v) {
    Vec acc(lp.dim, lp.x_space);
    for (std::size_t m = 0; m < M; ++m) acc += v[m];  // fixed order
    acc *= 1.0 / Md;
    return acc;
  };
  auto reduce_weighted = [&](const std::vector<Vec>& v) {
    Vec acc(lp.dim, lp.x_space);
    for (std::size_t m = 0; m < M; ++m) acc.axpy(lp.nodes[m].omega, v[m]);
    return acc;
  };

  switch (st.algo) {
    case DistAlgo::pd3o:
    case DistAlgo::loris_verhoeven: {
      Vec agg = gk * reduce_mean(st.a);
      Vec x_next = (st.algo == DistAlgo::pd3o) ? lp.prox_R_master(gk, agg)
                                               : agg;
      log_broadcast(x_next.size());
      detail::for_each_node(M, mode, [&](std::size_t m) {
        double mw = Md * lp.nodes[m].omega;
        Vec q_next = (mw / gk1) * Vec(x_next);
        q_next -= lp.node_grad(m, x_next);
        Vec inner = (mw / gk) * Vec(x_next);
        inner += q_next;
        inner -= st.q[m];
        Vec uarg = st.u[m];
        uarg.axpy(1.0 / eta, lp.node_K(m, inner));
        st.u[m] = lp.node_prox_H_conj(m, mw / (gk1 * eta), uarg);
        st.q[m] = std::move(q_next);
        st.a[m] = st.q[m] - lp.node_Kt(m, st.u[m]);
        log_reduce(static_cast<int>(m), st.a[m].size());
      });
      st.x = std::move(x_next);
      break;
    }
    case DistAlgo::pddy: {
      std::vector<Vec> a(M);
      detail::for_each_node(M, mode, [&](std::size_t m) {
        double mw = Md * lp.nodes[m].omega;
        Vec uarg = st.u[m];
        uarg.axpy(mw / (gk * eta), lp.node_K(m, st.x));
        st.u[m] = lp.node_prox_H_conj(m, mw / (gk * eta), uarg);
        Vec p_next = lp.node_Kt(m, st.u[m]);
        Vec xm = st.x;
        xm.axpy(-gk / mw, p_next - st.p[m]);
        st.p[m] = std::move(p_next);
        a[m] = mw * Vec(xm);
        a[m].axpy(-gk1, lp.node_grad(m, xm));
        a[m].axpy(-gk1, st.p[m]);
        log_reduce(static_cast<int>(m), a[m].size());
      });
      st.x = lp.prox_R_master(gk1, reduce_mean(a));
      log_broadcast(st.x.size());
      break;
    }
    case DistAlgo::davis_yin:
    case DistAlgo::douglas_rachford: {
      Vec x_next = lp.prox_R_master(gk, reduce_weighted(st.s));
      log_broadcast(x_next.size());
      double r = gk1 / gk;
      detail::for_each_node(M, mode, [&](std::size_t m) {
        double mw = Md * lp.nodes[m].omega;
        Vec arg = (1.0 + r) * Vec(x_next);
        arg.axpy(-r, st.s[m]);
        if (st.algo == DistAlgo::davis_yin)
          arg.axpy(-gk1 / mw, lp.node_grad(m, x_next));
        Vec xm = lp.node_prox_H(m, gk1 / mw, arg);
        Vec s_next = std::move(xm);
        s_next.axpy(r, st.s[m] - x_next);
        st.s[m] = std::move(s_next);
        log_reduce(static_cast<int>(m), st.s[m].size());
      });
      st.x = std::move(x_next);
      break;
    }
    case DistAlgo::chambolle_pock_i: {
      Vec agg = reduce_mean(st.a);
      Vec arg = st.x;
      arg.axpy(-gk, agg);
      Vec x_next = lp.prox_R_master(gk, arg);
      log_broadcast(x_next.size());
      detail::for_each_node(M, mode, [&](std::size_t m) {
        double mw = Md * lp.nodes[m].omega;
        Vec inner = (1.0 / gk + 1.0 / gk1) * Vec(x_next);
        inner.axpy(-1.0 / gk, st.x);
        Vec uarg = st.u[m];
        uarg.axpy(mw / eta, lp.node_K(m, inner));
        st.u[m] = lp.node_prox_H_conj(m, mw / (gk1 * eta), uarg);
        st.a[m] = lp.node_Kt(m, st.u[m]);
        log_reduce(static_cast<int>(m), st.a[m].size());
      });
      st.x = std::move(x_next);
      break;
    }
    case DistAlgo::chambolle_pock_ii: {
      std::vector<Vec> a(M);
      detail::for_each_node(M, mode, [&](std::size_t m) {
        double mw = Md * lp.nodes[m].omega;
        Vec uarg = st.u[m];
        uarg.axpy(mw / (gk * eta), lp.node_K(m, st.x));
        Vec u_next = lp.node_prox_H_conj(m, mw / (gk * eta), uarg);
        Vec d = (gk + gk1) * Vec(u_next);
        d.axpy(-gk, st.u[m]);
        a[m] = mw * Vec(st.x);
        a[m] -= lp.node_Kt(m, d);
        st.u[m] = std::move(u_next);
        log_reduce(static_cast<int>(m), a[m].size());
      });
      st.x = lp.prox_R_master(gk1, reduce_mean(a));
      log_broadcast(st.x.size());
      break;
    }
    case DistAlgo::forward_backward: {
      std::vector<Vec> a(M);
      detail::for_each_node(M, mode, [&](std::size_t m) {
        a[m] = lp.node_grad(m, st.x);
        log_reduce(static_cast<int>(m), a[m].size());
      });
      Vec arg = st.x;
      arg.axpy(-gk, reduce_mean(a));
      st.x = lp.prox_R_master(gk, arg);
      log_broadcast(st.x.size());
      break;
    }
    case DistAlgo::condat_vu_i: {
      Vec arg = st.x;
      arg.axpy(-gk, reduce_mean(st.a));
      Vec x_next = lp.prox_R_master(gk, arg);
      log_broadcast(x_next.size());
      detail::for_each_node(M, mode, [&](std::size_t m) {
        double mw = Md * lp.nodes[m].omega;
        Vec inner = 2.0 * Vec(x_next);
        inner -= st.x;
        Vec uarg = st.u[m];
        uarg.axpy(mw * st.sigma, lp.node_K(m, inner));
        st.u[m] = lp.node_prox_H_conj(m, mw * st.sigma, uarg);
        st.a[m] = lp.node_Kt(m, st.u[m]) + lp.node_grad(m, x_next);
        log_reduce(static_cast<int>(m), st.a[m].size());
      });
      st.x = std::move(x_next);
      break;
    }
    case DistAlgo::condat_vu_ii: {
      std::vector<Vec> a(M);
      detail::for_each_node(M, mode, [&](std::size_t m) {
        double mw = Md * lp.nodes[m].omega;
        Vec uarg = st.u[m];
        uarg.axpy(mw * st.sigma, lp.node_K(m, st.x));
        Vec u_next = lp.node_prox_H_conj(m, mw * st.sigma, uarg);
        Vec d = 2.0 * Vec(u_next);
        d -= st.u[m];
        a[m] = lp.node_Kt(m, d) + lp.node_grad(m, st.x);
        st.u[m] = std::move(u_next);
        log_reduce(static_cast<int>(m), a[m].size());
      });
      Vec arg = st.x;
      arg.axpy(-gk, reduce_mean(a));
      st.x = lp.prox_R_master(gk, arg);
      log_broadcast(st.x.size());
      break;
    }
  }
  ++st.k;
}

inline bool condat_vu_distributed_condition_ok(const LiftedProblem& lp,
                                               double gamma, double sigma) {
  double knorm = compute_K_hat_norm_sq(lp.nodes, LiftFamily::pd3o_like, true);
  double L = compute_L_hat(lp.nodes, LiftFamily::pd3o_like);
  return gamma * (sigma * knorm + L / 2.0) < 1.0;
}

struct DistRunResult {
  std::vector<TraceRecord> trace;
  DistState state;
};

inline DistRunResult simulate(DistAlgo algo, const LiftedProblem& lp,
                              const Schedule& sched, const StoppingRule& stop,
                              const Probe& probe, const Vec& x0,
                              EngineMode mode = EngineMode::sequential,
                              const std::vector<Vec>* u0 = nullptr,
                              double sigma = 0.0) {
  sched.validate(lp.L_hat);
  DistState st = init_dist_state(algo, lp, x0, sched.gamma0, u0, sigma);
  DistRunResult out;
  ScheduleIterator gammas(sched);
  ErgodicAccumulator ergodic;
  Vec prev = x0;
  auto t0 = std::chrono::steady_clock::now();
  std::vector<RoundMessage> round_msgs;

  for (long k = 0; k < stop.max_iter; ++k) {
    double gk = gammas.current();
    double gk1 = gammas.advance();
    round_msgs.clear();
    distributed_round(st, lp, gk, gk1, mode, &round_msgs);
    if (!st.x.all_finite()) throw DivergenceError(st.k, std::move(out.trace));
    ergodic.add(st.x);
    long bytes = 0;
    for (const auto& m : round_msgs)
      bytes += static_cast<long>(m.payload_dim) * 8;

    auto now = std::chrono::steady_clock::now();
    double wall = std::chrono::duration<double, std::milli>(now - t0).count();
    if ((st.k % probe.cadence) == 0 || k + 1 == stop.max_iter) {
      TraceRecord rec;
      rec.k = st.k;
      rec.gamma_k = gk;
      rec.wall_ms = wall;
      rec.msgs = static_cast<long>(round_msgs.size());
      rec.bytes = bytes;
      PsiValue pv = lp.psi(st.x);
      rec.psi_gap = pv.finite - probe.psi_star;
      rec.feasible = pv.feasible;
      if (probe.x_star) {
        rec.dist_sq = dist_sq(st.x, *probe.x_star);
        rec.ergodic_gap = lp.psi(ergodic.average()).finite - probe.psi_star;
      }
      out.trace.push_back(rec);
    }
    if (stop.tol > 0.0) {
      double rel = std::sqrt(dist_sq(st.x, prev)) / (norm(prev) + 1e-15);
      if (rel < stop.tol) break;
    }
    prev = st.x;
    if (stop.wall_limit_ms && wall > *stop.wall_limit_ms) break;
  }
  out.state = std::move(st);
  return out;
}

}  // namespace proxsplit
