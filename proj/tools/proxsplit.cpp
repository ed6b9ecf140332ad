#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "proxsplit/experiment.hpp"
#include "proxsplit/rate.hpp"
#include "proxsplit/trace_io.hpp"

using namespace proxsplit;

namespace {

struct Overrides {
  std::optional<unsigned> seed;
  std::optional<long> max_iter;
  std::optional<std::string> out;
  bool emit_gnuplot = false;
};

ExperimentConfig load_with_overrides(const std::string& path,
                                     const Overrides& ov) {
  ExperimentConfig c = parse_config_file(path);
  if (ov.seed) c.seed = *ov.seed;
  if (ov.max_iter) c.max_iter = *ov.max_iter;
  if (ov.out) c.out = *ov.out;
  if (ov.emit_gnuplot) c.emit_gnuplot = true;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"proximal splitting benchmark harness"};
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path;
  std::vector<std::string> config_set;
  std::string csv_path, column = "dist_sq", model = "powerlaw";

  auto* run_cmd = app.add_subcommand("run", "run one experiment config");
  run_cmd->add_option("config", config_path, "config file")->required();
  run_cmd->add_option("--seed", ov.seed, "override the seed");
  run_cmd->add_option("--max-iter", ov.max_iter, "override max iterations");
  run_cmd->add_option("--out", ov.out, "override the CSV output path");
  run_cmd->add_flag("--emit-gnuplot", ov.emit_gnuplot,
                    "also write a gnuplot script");

  auto* check_cmd =
      app.add_subcommand("check", "rate checks over existing traces");
  check_cmd->add_option("configs", config_set, "config files")->required();

  auto* ref_cmd = app.add_subcommand("ref", "compute the reference solution");
  ref_cmd->add_option("config", config_path, "config file")->required();
  ref_cmd->add_option("--seed", ov.seed, "override the seed");

  auto* rate_cmd = app.add_subcommand("rate", "fit a rate to a CSV trace");
  rate_cmd->add_option("csv", csv_path, "trace CSV")->required();
  rate_cmd->add_option("--column", column, "psi_gap | dist_sq | ergodic_gap");
  rate_cmd->add_option("--model", model, "powerlaw | linear_geometric");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) {
      ExperimentConfig c = load_with_overrides(config_path, ov);
      ExperimentResult r = run_experiment(c);
      std::cout << "wrote " << r.csv_path << " (" << r.trace.size()
                << " records) and " << r.sidecar_path << "\n";
      if (r.exit_code != 0) {
        std::cerr << "solver diverged; trace is partial\n";
        return 1;
      }
      return 0;
    }
    if (check_cmd->parsed()) {
      std::vector<ExperimentConfig> cs;
      for (const auto& p : config_set) cs.push_back(parse_config_file(p));
      auto checks = check_theorems(cs);
      std::cout << render_report(checks);
      for (const auto& t : checks)
        if (t.status == 1) return 1;
      return 0;
    }
    if (ref_cmd->parsed()) {
      ExperimentConfig c = load_with_overrides(config_path, ov);
      Reference ref = reference_solution(c);
      std::cout << "psi_star = " << format_double(ref.psi_star)
                << " (cache key " << reference_cache_key(c)
                << (ref.from_cache ? ", cached" : ", computed") << ")\n";
      return 0;
    }
    if (rate_cmd->parsed()) {
      auto trace = read_csv_file(csv_path);
      RateEstimate e =
          estimate_rate(trace, trace_column_from_string(column),
                        rate_model_from_string(model));
      std::cout << "model " << to_string(e.model) << ", slope "
                << format_double(e.slope);
      if (e.model == RateModel::linear_geometric)
        std::cout << ", factor " << format_double(e.factor);
      std::cout << ", r_squared " << format_double(e.r_squared) << ", window ["
                << e.k_lo << ", " << e.k_hi << "]\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
