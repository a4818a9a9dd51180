#pragma once

// Experiment configuration: INI file with sections [model], [kernel],
// [grid], [mc], [optimizer], [scan], [ladder], [path], [contrast],
// [output], [run]. A section named after a subcommand (e.g. [mc-rate]) may
// override any key with a dotted name such as `grid.n = 1024`.

#include "roughtfe/errors.hpp"
#include "roughtfe/model.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace roughtfe::harness {

class config_error : public domain_error {
 public:
  using domain_error::domain_error;
};

struct ExperimentConfig {
  // model
  std::string family = "fractional_linear";
  double sigma = 1.0;
  std::vector<double> x0 = {2.0};
  int dtheta = 2;
  std::vector<double> lower = {0.0, -1.0};
  std::vector<double> upper = {3.0, 1.0};
  std::vector<double> theta_star = {1.0, 0.0};
  double offset = 0.0;  // fixed intercept of FractionalLinear when d_theta = 1
  // kernel and grid
  double alpha = 0.25;
  double T = 1.0;
  std::size_t n = 512;
  // Monte Carlo
  std::vector<double> epsilons = {0.2, 0.1, 0.05, 0.025};
  std::size_t replications = 200;
  std::uint64_t seed = 20240611;
  std::string metric = "theta";  // theta | contrast | expansion
  double slope_min = 0.7;
  double slope_max = 1.3;
  double max_failure_fraction = 0.01;
  // estimator
  int grid_points = 11;
  int max_iter = 500;
  double rel_tol = 1e-6;
  // identifiability scan
  double r_min = 1e-3;
  double r_max = 1e-1;
  std::size_t radii = 9;
  double rho_min = 1.7;
  double rho_max = 2.3;
  // resolution ladder for kernel-check / solver-convergence
  std::vector<std::size_t> ladder = {256, 512, 1024, 2048, 4096};
  double kernel_tol = 0.05;
  double min_order = 0.5;
  // single-path subcommands
  double epsilon = 0.1;
  std::uint64_t replicate = 0;
  std::vector<double> theta;  // empty: use theta_star
  // uniform contrast convergence
  std::size_t theta_points = 21;
  // output and execution (workers never influence results)
  std::string out = "out";
  unsigned workers = 1;
};

inline constexpr std::array<std::string_view, 8> kSubcommands = {
    "simulate", "solve-det", "estimate", "mc-rate",
    "normality", "kernel-check", "solver-convergence", "ident-scan"};

namespace detail {

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& key) {
  std::string s = text;
  for (char& c : s)
    if (c == ',' || c == ';') c = ' ';
  std::istringstream is(s);
  std::vector<T> out;
  T v;
  while (is >> v) out.push_back(v);
  if (!is.eof()) throw config_error("cannot parse list for key '" + key + "': " + text);
  return out;
}

template <class T>
T parse_scalar(const std::string& text, const std::string& key) {
  std::istringstream is(text);
  T v{};
  is >> v;
  if (is.fail() || !(is >> std::ws).eof())
    throw config_error("cannot parse value for key '" + key + "': " + text);
  return v;
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  char buf[40];
  for (std::size_t k = 0; k < v.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", v[k]);
    if (k) s += ',';
    s += buf;
  }
  return s;
}

inline std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ',';
    s += std::to_string(v[k]);
  }
  return s;
}

inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

// Applies one "section.key = value" setting.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_list;
  using detail::parse_scalar;
  if (key == "model.family") c.family = value;
  else if (key == "model.sigma") c.sigma = parse_scalar<double>(value, key);
  else if (key == "model.x0") c.x0 = parse_list<double>(value, key);
  else if (key == "model.dtheta") c.dtheta = parse_scalar<int>(value, key);
  else if (key == "model.lower") c.lower = parse_list<double>(value, key);
  else if (key == "model.upper") c.upper = parse_list<double>(value, key);
  else if (key == "model.theta_star") c.theta_star = parse_list<double>(value, key);
  else if (key == "model.offset") c.offset = parse_scalar<double>(value, key);
  else if (key == "kernel.alpha") c.alpha = parse_scalar<double>(value, key);
  else if (key == "grid.T") c.T = parse_scalar<double>(value, key);
  else if (key == "grid.n") c.n = parse_scalar<std::size_t>(value, key);
  else if (key == "mc.epsilons") c.epsilons = parse_list<double>(value, key);
  else if (key == "mc.replications") c.replications = parse_scalar<std::size_t>(value, key);
  else if (key == "mc.seed") c.seed = parse_scalar<std::uint64_t>(value, key);
  else if (key == "mc.metric") c.metric = value;
  else if (key == "mc.slope_min") c.slope_min = parse_scalar<double>(value, key);
  else if (key == "mc.slope_max") c.slope_max = parse_scalar<double>(value, key);
  else if (key == "mc.max_failure_fraction") c.max_failure_fraction = parse_scalar<double>(value, key);
  else if (key == "optimizer.grid_points") c.grid_points = parse_scalar<int>(value, key);
  else if (key == "optimizer.max_iter") c.max_iter = parse_scalar<int>(value, key);
  else if (key == "optimizer.rel_tol") c.rel_tol = parse_scalar<double>(value, key);
  else if (key == "scan.r_min") c.r_min = parse_scalar<double>(value, key);
  else if (key == "scan.r_max") c.r_max = parse_scalar<double>(value, key);
  else if (key == "scan.radii") c.radii = parse_scalar<std::size_t>(value, key);
  else if (key == "scan.rho_min") c.rho_min = parse_scalar<double>(value, key);
  else if (key == "scan.rho_max") c.rho_max = parse_scalar<double>(value, key);
  else if (key == "ladder.steps") c.ladder = parse_list<std::size_t>(value, key);
  else if (key == "ladder.kernel_tol") c.kernel_tol = parse_scalar<double>(value, key);
  else if (key == "ladder.min_order") c.min_order = parse_scalar<double>(value, key);
  else if (key == "path.epsilon") c.epsilon = parse_scalar<double>(value, key);
  else if (key == "path.replicate") c.replicate = parse_scalar<std::uint64_t>(value, key);
  else if (key == "path.theta") c.theta = parse_list<double>(value, key);
  else if (key == "contrast.theta_points") c.theta_points = parse_scalar<std::size_t>(value, key);
  else if (key == "output.dir") c.out = value;
  else if (key == "run.workers") c.workers = parse_scalar<unsigned>(value, key);
  else throw config_error("unknown configuration key '" + key + "'");
}

// Reads an INI file. Plain sections are applied first, then the section
// named `subcommand` (if present) whose keys carry their section prefix.
inline ExperimentConfig load_config(const std::string& path, const std::string& subcommand = {}) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw config_error(std::string("cannot read config: ") + e.what());
  }
  ExperimentConfig c;
  std::vector<std::pair<std::string, std::string>> overrides;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw config_error("key '" + section + "' outside of any section");
    const bool is_subcommand =
        std::find(kSubcommands.begin(), kSubcommands.end(), section) != kSubcommands.end();
    for (const auto& [key, val] : body) {
      if (!is_subcommand) apply_setting(c, section + "." + key, val.data());
      else if (section == subcommand) overrides.emplace_back(key, val.data());
    }
  }
  for (const auto& [k, v] : overrides) apply_setting(c, k, v);
  return c;
}

inline void validate(const ExperimentConfig& c) {
  if (c.family != "constant_drift" && c.family != "fractional_linear" &&
      c.family != "bounded_nonlinear")
    throw config_error("unknown model family '" + c.family + "'");
  if (!(c.alpha > 0.0 && c.alpha < 0.5)) throw config_error("alpha must lie in (0, 1/2)");
  if (!(c.T > 0.0)) throw config_error("T must be positive");
  if (c.n < 2) throw config_error("n must be at least 2");
  if (c.epsilons.empty()) throw config_error("epsilon ladder is empty");
  for (std::size_t k = 0; k < c.epsilons.size(); ++k) {
    if (!(c.epsilons[k] > 0.0 && c.epsilons[k] <= 1.0))
      throw config_error("epsilon values must lie in (0, 1]");
    if (k > 0 && !(c.epsilons[k] < c.epsilons[k - 1]))
      throw config_error("epsilon ladder must be strictly decreasing");
  }
  if (c.replications < 1) throw config_error("replications must be at least 1");
  if (c.metric != "theta" && c.metric != "contrast" && c.metric != "expansion")
    throw config_error("mc.metric must be one of theta, contrast, expansion");
  if (c.grid_points < 2) throw config_error("optimizer.grid_points must be at least 2");
  if (c.max_iter < 1) throw config_error("optimizer.max_iter must be positive");
  if (!(c.epsilon >= 0.0 && c.epsilon <= 1.0)) throw config_error("path.epsilon must lie in [0, 1]");
  if (c.theta_points < 2) throw config_error("contrast.theta_points must be at least 2");
  if (c.ladder.size() < 2) throw config_error("ladder.steps needs at least two resolutions");
  if (c.workers < 1) throw config_error("workers must be at least 1");
  if (c.lower.size() != static_cast<std::size_t>(c.dtheta) ||
      c.upper.size() != static_cast<std::size_t>(c.dtheta) ||
      c.theta_star.size() != static_cast<std::size_t>(c.dtheta))
    throw config_error("box bounds and theta_star must have d_theta entries");
  if (!c.theta.empty() && c.theta.size() != static_cast<std::size_t>(c.dtheta))
    throw config_error("path.theta must have d_theta entries");
}

inline Vector to_vector(const std::vector<double>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) out(static_cast<Eigen::Index>(k)) = v[k];
  return out;
}

inline ModelSpec make_model(const ExperimentConfig& c) {
  ParamDomain box(to_vector(c.lower), to_vector(c.upper));
  ModelSpec m = [&] {
    if (c.family == "constant_drift") return constant_drift(c.dtheta, c.sigma, to_vector(c.x0), box);
    if (c.x0.size() != 1) throw config_error(c.family + " is scalar: x0 must have one entry");
    if (c.family == "fractional_linear") return fractional_linear(c.dtheta, c.sigma, c.x0[0], box, c.offset);
    return bounded_nonlinear(c.sigma, c.x0[0], box);
  }();
  check_theta(m, to_vector(c.theta_star));
  return m;
}

// Canonical key=value listing of every field that influences results
// (workers and the output directory are excluded).
inline std::string canonical(const ExperimentConfig& c) {
  using detail::join;
  using detail::num;
  std::map<std::string, std::string> kv{
      {"model.family", c.family},
      {"model.sigma", num(c.sigma)},
      {"model.x0", join(c.x0)},
      {"model.dtheta", std::to_string(c.dtheta)},
      {"model.lower", join(c.lower)},
      {"model.upper", join(c.upper)},
      {"model.theta_star", join(c.theta_star)},
      {"model.offset", num(c.offset)},
      {"kernel.alpha", num(c.alpha)},
      {"grid.T", num(c.T)},
      {"grid.n", std::to_string(c.n)},
      {"mc.epsilons", join(c.epsilons)},
      {"mc.replications", std::to_string(c.replications)},
      {"mc.seed", std::to_string(c.seed)},
      {"mc.metric", c.metric},
      {"mc.slope_min", num(c.slope_min)},
      {"mc.slope_max", num(c.slope_max)},
      {"mc.max_failure_fraction", num(c.max_failure_fraction)},
      {"optimizer.grid_points", std::to_string(c.grid_points)},
      {"optimizer.max_iter", std::to_string(c.max_iter)},
      {"optimizer.rel_tol", num(c.rel_tol)},
      {"scan.r_min", num(c.r_min)},
      {"scan.r_max", num(c.r_max)},
      {"scan.radii", std::to_string(c.radii)},
      {"scan.rho_min", num(c.rho_min)},
      {"scan.rho_max", num(c.rho_max)},
      {"ladder.steps", join(c.ladder)},
      {"ladder.kernel_tol", num(c.kernel_tol)},
      {"ladder.min_order", num(c.min_order)},
      {"path.epsilon", num(c.epsilon)},
      {"path.replicate", std::to_string(c.replicate)},
      {"path.theta", join(c.theta)},
      {"contrast.theta_points", std::to_string(c.theta_points)},
  };
  std::string s;
  for (const auto& [k, v] : kv) s += k + "=" + v + "\n";
  return s;
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical(c))));
  return buf;
}

}  // namespace roughtfe::harness
