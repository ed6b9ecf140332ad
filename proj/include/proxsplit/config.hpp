#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxsplit/rate.hpp"
#include "proxsplit/schedules.hpp"
#include "proxsplit/trace_io.hpp"

namespace proxsplit {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One benchmark run: problem, algorithm, schedule, stopping, output.
/// Serializes to a small TOML-shaped text file (sections, key = value).
struct ExperimentConfig {
  std::string name = "experiment";

  // [problem]
  std::string problem = "deblur-tv";  // deblur-tv | deblur-huber |
                                      // svm-hinge-toy | svm-hinge-australian |
                                      // quadratic
  long n = 64;             // image side, or quadratic dimension
  long samples = 100;      // svm-hinge-toy
  long features = 20;      // svm-hinge-toy
  double lambda = 0.6;
  double nu = 0.1;
  double noise_sigma = 0.01;
  double mu_f = 0.01;      // blur spectrum floor = sqrt of this
  double alpha = 0.1;      // svm regularization
  std::string data_path;   // svm-hinge-australian

  // [algorithm]
  std::string algorithm = "pd3o";
  bool distributed = false;
  long nodes = 1;
  std::string weights = "uniform";
  std::string engine = "sequential";  // or "parallel"
  double sigma = 0.0;                 // condat_vu dual stepsize
  std::optional<double> eta_override;

  // [schedule]
  std::string schedule = "constant";  // constant | accel_pd3o | accel_pddy
  double gamma0 = 1.0;
  double kappa = 0.15;
  std::optional<double> mu_f_override;  // schedule mu, defaults from problem
  std::optional<double> mu_r_override;

  // [stopping]
  long max_iter = 1000;
  double tol = 0.0;

  // [output]
  std::string out = "trace.csv";
  long cadence = 1;
  unsigned seed = 1;
  bool record_wall = false;
  bool emit_gnuplot = false;
  std::string cache_dir = ".proxsplit-cache";

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    return s.substr(1, s.size() - 2);
  return s;
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("config: " + key + " must be true or false, got " + v);
}

inline double parse_real(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " is not a number: " + v);
  }
}

inline long parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    long i = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " is not an integer: " + v);
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config: bad section at line " +
                          std::to_string(lineno));
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key = value at line " +
                        std::to_string(lineno));
    std::string key = detail::trim(line.substr(0, eq));
    std::string val = detail::unquote(detail::trim(line.substr(eq + 1)));
    std::string full = section.empty() ? key : section + "." + key;

    using detail::parse_bool;
    using detail::parse_int;
    using detail::parse_real;
    if (full == "name") c.name = val;
    else if (full == "problem.kind") c.problem = val;
    else if (full == "problem.n") c.n = parse_int(val, full);
    else if (full == "problem.samples") c.samples = parse_int(val, full);
    else if (full == "problem.features") c.features = parse_int(val, full);
    else if (full == "problem.lambda") c.lambda = parse_real(val, full);
    else if (full == "problem.nu") c.nu = parse_real(val, full);
    else if (full == "problem.noise_sigma") c.noise_sigma = parse_real(val, full);
    else if (full == "problem.mu_f") c.mu_f = parse_real(val, full);
    else if (full == "problem.alpha") c.alpha = parse_real(val, full);
    else if (full == "problem.data_path") c.data_path = val;
    else if (full == "algorithm.id") c.algorithm = val;
    else if (full == "algorithm.distributed") c.distributed = parse_bool(val, full);
    else if (full == "algorithm.nodes") c.nodes = parse_int(val, full);
    else if (full == "algorithm.weights") c.weights = val;
    else if (full == "algorithm.engine") c.engine = val;
    else if (full == "algorithm.sigma") c.sigma = parse_real(val, full);
    else if (full == "algorithm.eta") c.eta_override = parse_real(val, full);
    else if (full == "schedule.kind") c.schedule = val;
    else if (full == "schedule.gamma0") c.gamma0 = parse_real(val, full);
    else if (full == "schedule.kappa") c.kappa = parse_real(val, full);
    else if (full == "schedule.mu_f") c.mu_f_override = parse_real(val, full);
    else if (full == "schedule.mu_r") c.mu_r_override = parse_real(val, full);
    else if (full == "stopping.max_iter") c.max_iter = parse_int(val, full);
    else if (full == "stopping.tol") c.tol = parse_real(val, full);
    else if (full == "output.out") c.out = val;
    else if (full == "output.cadence") c.cadence = parse_int(val, full);
    else if (full == "output.seed")
      c.seed = static_cast<unsigned>(parse_int(val, full));
    else if (full == "output.record_wall") c.record_wall = parse_bool(val, full);
    else if (full == "output.emit_gnuplot") c.emit_gnuplot = parse_bool(val, full);
    else if (full == "output.cache_dir") c.cache_dir = val;
    else
      throw ConfigError("config: unknown key '" + full + "' at line " +
                        std::to_string(lineno));
  }
  return c;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  return parse_config(in);
}

inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "name = \"" << c.name << "\"\n\n";
  os << "[problem]\n";
  os << "kind = \"" << c.problem << "\"\n";
  os << "n = " << c.n << "\n";
  os << "samples = " << c.samples << "\n";
  os << "features = " << c.features << "\n";
  os << "lambda = " << format_double(c.lambda) << "\n";
  os << "nu = " << format_double(c.nu) << "\n";
  os << "noise_sigma = " << format_double(c.noise_sigma) << "\n";
  os << "mu_f = " << format_double(c.mu_f) << "\n";
  os << "alpha = " << format_double(c.alpha) << "\n";
  if (!c.data_path.empty()) os << "data_path = \"" << c.data_path << "\"\n";
  os << "\n[algorithm]\n";
  os << "id = \"" << c.algorithm << "\"\n";
  os << "distributed = " << (c.distributed ? "true" : "false") << "\n";
  os << "nodes = " << c.nodes << "\n";
  os << "weights = \"" << c.weights << "\"\n";
  os << "engine = \"" << c.engine << "\"\n";
  os << "sigma = " << format_double(c.sigma) << "\n";
  if (c.eta_override) os << "eta = " << format_double(*c.eta_override) << "\n";
  os << "\n[schedule]\n";
  os << "kind = \"" << c.schedule << "\"\n";
  os << "gamma0 = " << format_double(c.gamma0) << "\n";
  os << "kappa = " << format_double(c.kappa) << "\n";
  if (c.mu_f_override) os << "mu_f = " << format_double(*c.mu_f_override) << "\n";
  if (c.mu_r_override) os << "mu_r = " << format_double(*c.mu_r_override) << "\n";
  os << "\n[stopping]\n";
  os << "max_iter = " << c.max_iter << "\n";
  os << "tol = " << format_double(c.tol) << "\n";
  os << "\n[output]\n";
  os << "out = \"" << c.out << "\"\n";
  os << "cadence = " << c.cadence << "\n";
  os << "seed = " << c.seed << "\n";
  os << "record_wall = " << (c.record_wall ? "true" : "false") << "\n";
  os << "emit_gnuplot = " << (c.emit_gnuplot ? "true" : "false") << "\n";
  os << "cache_dir = \"" << c.cache_dir << "\"\n";
  return os.str();
}

}  // namespace proxsplit
