#pragma once

#include <optional>
#include <string>
#include <vector>

#include "proxsplit/config.hpp"
#include "proxsplit/distributed.hpp"
#include "proxsplit/problems.hpp"
#include "proxsplit/rate.hpp"
#include "proxsplit/solvers.hpp"

namespace proxsplit {

/// A config resolved into a runnable problem: either a sequential term
/// bundle or a lifted (distributed) one.
struct BuiltProblem {
  std::optional<TermBundle> bundle;
  std::optional<LiftedProblem> lifted;
  Vec x0;
  double prob_mu_f = 0.0;  // defaults for the accelerated schedules
  double prob_mu_r = 0.0;
};

BuiltProblem build_problem(const ExperimentConfig& c);
Schedule build_schedule(const ExperimentConfig& c, const BuiltProblem& p);

struct Reference {
  Vec x_star;
  double psi_star = 0.0;
  bool from_cache = false;
};

/// Long high-accuracy run, cached on disk keyed by a content hash of the
/// problem parameters. A corrupt cache entry is recomputed with a warning.
Reference reference_solution(const ExperimentConfig& c);
std::string reference_cache_key(const ExperimentConfig& c);

struct ExperimentResult {
  std::vector<TraceRecord> trace;
  int exit_code = 0;  // 0 ok, 1 divergence
  std::string csv_path;
  std::string sidecar_path;
};

/// Runs the config end to end: reference, solve, CSV + JSON sidecar with
/// the config echo, reference constants and rate estimates. On divergence
/// the partial trace is still written and exit_code is 1.
ExperimentResult run_experiment(const ExperimentConfig& c);

struct TheoremCheck {
  std::string name;
  std::string required;
  std::string measured;
  int status = 0;  // 0 pass, 1 fail, 2 skipped
};

/// Convergence-rate checks for a set of configs against the bounds the
/// rate theory predicts for each preset/schedule pairing.
std::vector<TheoremCheck> check_theorems(const std::vector<ExperimentConfig>& cs);

std::string render_report(const std::vector<TheoremCheck>& checks);

}  // namespace proxsplit
