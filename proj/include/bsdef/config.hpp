#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bsdef/experiment.hpp"

namespace bsdef {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::istringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(trim(cell)));
  return out;
}

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw std::invalid_argument("config: expected a boolean, got '" + s + "'");
}

// "normal(m,s)" or "constant(c)"
inline MarkDistribution parse_marks(const std::string& s) {
  const auto open = s.find('(');
  const auto close = s.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw std::invalid_argument("config: malformed mark distribution '" + s +
                                "'");
  const std::string name = trim(s.substr(0, open));
  const auto args = parse_double_list(s.substr(open + 1, close - open - 1));
  if (name == "normal" && args.size() == 2)
    return MarkDistribution::normal(args[0], args[1]);
  if (name == "constant" && args.size() == 1)
    return MarkDistribution::constant(args[0]);
  throw std::invalid_argument("config: unknown mark distribution '" + s + "'");
}

}  // namespace detail

// Flat key-value config, INI-style sections; '#' and ';' start comments.
// Keys come back as "section.key".
inline std::map<std::string, std::string> parse_ini(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": empty key");
    out[section.empty() ? key : section + "." + key] = value;
  }
  return out;
}

inline std::map<std::string, std::string> parse_ini_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  return parse_ini(in);
}

// Applies one "section.key" entry; unknown keys are an error.
inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double_list;
  auto int_of = [&] { return std::stoi(value); };
  auto dbl_of = [&] { return std::stod(value); };

  if (key == "experiment.name") {
    cfg.experiment = value;
  } else if (key == "experiment.repeats") {
    cfg.repeats = int_of();
  } else if (key == "experiment.seed") {
    cfg.seed = std::stoull(value);
  } else if (key == "experiment.out_dir") {
    cfg.out_dir = value;
  } else if (key == "experiment.threads") {
    cfg.threads = int_of();
  } else if (key == "experiment.method") {
    if (value == "bsde")
      cfg.method = Method::Bsde;
    else if (value == "apf")
      cfg.method = Method::Apf;
    else if (value == "both")
      cfg.method = Method::Both;
    else
      throw std::invalid_argument("config: method must be bsde|apf|both");
  } else if (key == "experiment.write_traces") {
    cfg.write_traces = parse_bool(value);
  } else if (key == "experiment.rmse_full_state") {
    cfg.rmse_full_state = parse_bool(value);
  } else if (key == "grid.t0") {
    cfg.t0 = dbl_of();
  } else if (key == "grid.T") {
    cfg.T = dbl_of();
  } else if (key == "grid.n_steps") {
    cfg.n_steps = int_of();
  } else if (key == "grid.dt") {
    const double dt = dbl_of();
    if (!(dt > 0.0)) throw std::invalid_argument("config: dt must be > 0");
    cfg.n_steps = static_cast<int>(std::lround((cfg.T - cfg.t0) / dt));
  } else if (key == "filter.n_points") {
    cfg.filter.n_points = int_of();
  } else if (key == "filter.mc_samples") {
    cfg.filter.mc_samples = int_of();
  } else if (key == "filter.neighbors") {
    cfg.filter.neighbors = int_of();
  } else if (key == "filter.mcmc_iters") {
    cfg.filter.mcmc_iters = int_of();
  } else if (key == "filter.proposal_scale") {
    if (value == "auto") {
      cfg.filter.proposal_scale.resize(0);
    } else {
      const auto v = parse_double_list(value);
      cfg.filter.proposal_scale =
          Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    }
  } else if (key == "filter.density_floor") {
    cfg.filter.density_floor = dbl_of();
  } else if (key == "filter.shepard") {
    if (value == "inverse")
      cfg.filter.shepard = ShepardMode::Inverse;
    else if (value == "as_printed")
      cfg.filter.shepard = ShepardMode::AsPrinted;
    else
      throw std::invalid_argument("config: shepard must be inverse|as_printed");
  } else if (key == "filter.estimator") {
    if (value == "mean")
      cfg.filter.estimator = Estimator::Mean;
    else if (value == "mode")
      cfg.filter.estimator = Estimator::Mode;
    else
      throw std::invalid_argument("config: estimator must be mean|mode");
  } else if (key == "filter.knn") {
    if (value == "auto")
      cfg.filter.knn = NeighborIndex::Method::Auto;
    else if (value == "brute")
      cfg.filter.knn = NeighborIndex::Method::Brute;
    else if (value == "kdtree")
      cfg.filter.knn = NeighborIndex::Method::KdTree;
    else if (value == "sorted1d")
      cfg.filter.knn = NeighborIndex::Method::Sorted1D;
    else
      throw std::invalid_argument(
          "config: knn must be auto|brute|kdtree|sorted1d");
  } else if (key == "filter.threads") {
    cfg.filter.threads = int_of();
  } else if (key == "filter.keep_clouds") {
    cfg.filter.keep_clouds = parse_bool(value);
  } else if (key == "apf.particles") {
    cfg.apf_particles.clear();
    for (double v : parse_double_list(value))
      cfg.apf_particles.push_back(static_cast<int>(v));
  } else if (key == "model.jump_rate") {
    cfg.jump_rate = dbl_of();
  } else if (key == "model.marks") {
    cfg.marks = detail::parse_marks(value);
  } else if (key == "model.alpha") {
    cfg.alpha = dbl_of();
  } else if (key == "model.jump_gamma") {
    cfg.jump_gamma = dbl_of();
  } else if (key == "model.kinematics") {
    if (value == "paper")
      cfg.kinematics = Kinematics::Paper;
    else if (value == "standard")
      cfg.kinematics = Kinematics::Standard;
    else
      throw std::invalid_argument("config: kinematics must be paper|standard");
  } else if (key == "model.custom_drift_a") {
    cfg.custom_drift_a = dbl_of();
  } else if (key == "model.custom_sigma") {
    cfg.custom_sigma = dbl_of();
  } else if (key == "model.custom_obs_var") {
    cfg.custom_obs_var = dbl_of();
  } else if (key == "model.custom_prior_mean") {
    cfg.custom_prior_mean = dbl_of();
  } else if (key == "model.custom_prior_var") {
    cfg.custom_prior_var = dbl_of();
  } else if (key == "potential.well_depth") {
    cfg.well_depth = dbl_of();
  } else if (key == "potential.lattice_constant") {
    cfg.lattice_constant = dbl_of();
  } else if (key == "potential.domain") {
    const auto v = parse_double_list(value);
    if (v.size() != 4)
      throw std::invalid_argument(
          "config: potential.domain needs xmin,xmax,ymin,ymax");
    cfg.pot_domain = Rect{v[0], v[1], v[2], v[3]};
  } else if (key == "potential.resolution") {
    cfg.resolution = int_of();
  } else if (key == "potential.fit_tolerance") {
    cfg.fit_tolerance = dbl_of();
  } else if (key == "potential.max_degree") {
    cfg.max_degree = int_of();
  } else if (key == "potential.csv") {
    cfg.potential_csv = value;
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

inline void apply_config(ExperimentConfig& cfg,
                         const std::map<std::string, std::string>& entries) {
  // the experiment name first: later keys may depend on it
  const auto name = entries.find("experiment.name");
  if (name != entries.end()) cfg.experiment = name->second;
  // grid bounds before dt so n_steps derives from the final T
  for (const char* k : {"grid.t0", "grid.T"}) {
    const auto it = entries.find(k);
    if (it != entries.end()) apply_config_entry(cfg, k, it->second);
  }
  for (const auto& [key, value] : entries) {
    if (key == "experiment.name" || key == "grid.t0" || key == "grid.T")
      continue;
    apply_config_entry(cfg, key, value);
  }
}

// Preset selected by `experiment` (file's experiment.name when empty), with
// file entries applied on top.
inline ExperimentConfig load_experiment_config(const std::string& experiment,
                                               const std::string& config_path) {
  std::map<std::string, std::string> entries;
  if (!config_path.empty()) entries = parse_ini_file(config_path);
  std::string name = experiment;
  if (name.empty()) {
    const auto it = entries.find("experiment.name");
    name = (it != entries.end()) ? it->second : "example1";
  }
  ExperimentConfig cfg = ExperimentConfig::preset(name);
  apply_config(cfg, entries);
  cfg.experiment = name;  // an explicit CLI experiment wins over the file
  return cfg;
}

}  // namespace bsdef
