#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bsdef/apf.hpp"
#include "bsdef/csv.hpp"
#include "bsdef/filter.hpp"
#include "bsdef/models.hpp"
#include "bsdef/parallel.hpp"
#include "bsdef/potential.hpp"

namespace bsdef {

// Which filters a run executes.
enum class Method { Bsde, Apf, Both };

// Full description of one reproducible experiment run.  preset() returns
// the built-in setups; the INI loader and CLI flags override fields.
struct ExperimentConfig {
  std::string experiment = "example1";

  // [grid]
  double t0 = 0.0;
  double T = 2.0;
  int n_steps = 100;

  // [experiment]
  int repeats = 1;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int threads = 0;  // parallel trials; 0 = hardware concurrency
  Method method = Method::Both;
  bool write_traces = true;
  bool rmse_full_state = false;

  // [filter]
  FilterConfig filter;

  // [apf]
  std::vector<int> apf_particles{800};

  // [model]
  double jump_rate = 1.0;  // compound-Poisson experiments
  MarkDistribution marks = MarkDistribution::normal();
  double alpha = 1.0;       // example2 stable index
  double jump_gamma = 1.0;  // example2 stable scale
  Kinematics kinematics = Kinematics::Paper;
  double custom_drift_a = -0.5;  // custom: b(x) = a x
  double custom_sigma = 0.4;
  double custom_obs_var = 0.04;
  double custom_prior_mean = 0.0;
  double custom_prior_var = 0.25;

  // [potential]
  double well_depth = 4.0;
  double lattice_constant = 10.0;
  Rect pot_domain{-10.0, 10.0, -10.0, 10.0};
  int resolution = 24;
  double fit_tolerance = 0.05;
  int max_degree = 12;
  std::string potential_csv;  // external surface instead of the lattice

  TimeGrid grid() const { return TimeGrid(t0, T, n_steps); }

  static ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;
    c.experiment = name;
    if (name == "example1") {
      c.T = 2.0;
      c.n_steps = 100;
      c.repeats = 50;
      c.filter.n_points = 200;
      c.apf_particles = {400, 800, 1600, 3200};
    } else if (name == "example2") {
      c.T = 2.0;
      c.n_steps = 50;
      c.repeats = 20;
      c.filter.n_points = 1500;
      c.apf_particles = {6000};
      c.alpha = 1.0;
    } else if (name == "potential1" || name == "potential2") {
      c.T = 10.0;
      c.n_steps = 500;
      c.repeats = 10;
      c.filter.n_points = 200;
      c.apf_particles = {1600};
      c.jump_rate = 0.5;
    } else if (name == "custom") {
      c.T = 1.0;
      c.n_steps = 20;
      c.repeats = 1;
      c.filter.n_points = 400;
      c.apf_particles = {10000};
    } else {
      throw std::invalid_argument("unknown experiment: " + name);
    }
    return c;
  }

  void validate() const {
    if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
    grid();  // validates the time grid
    filter.validate();
    for (int k : apf_particles)
      if (k < 1) throw std::invalid_argument("apf particles must be >= 1");
  }
};

// Models for the configured experiment.  The potential surface (when any)
// is fitted once and shared by every trial.
inline std::pair<JumpDiffusionModel, ObservationModel> make_models(
    const ExperimentConfig& cfg) {
  if (cfg.experiment == "example1")
    return example1_model(cfg.jump_rate, cfg.marks);
  if (cfg.experiment == "example2")
    return example2_model(cfg.alpha, cfg.kinematics, cfg.jump_gamma);
  if (cfg.experiment == "potential1" || cfg.experiment == "potential2") {
    std::shared_ptr<GriddedPotential> pot;
    if (!cfg.potential_csv.empty()) {
      pot = std::make_shared<GriddedPotential>(GriddedPotential::load_csv(
          cfg.potential_csv, cfg.fit_tolerance, cfg.max_degree));
    } else {
      pot = build_potential_lattice(cfg.well_depth, cfg.lattice_constant,
                                    cfg.pot_domain, cfg.resolution,
                                    cfg.fit_tolerance, cfg.max_degree);
    }
    if (cfg.experiment == "potential2") pot->negate();
    return potential_surface_model(pot, cfg.jump_rate, cfg.marks);
  }
  if (cfg.experiment == "custom") {
    JumpDiffusionModel model;
    model.dim = 1;
    const double a = cfg.custom_drift_a;
    model.drift = [a](const Vector& x) { return Vector(a * x); };
    model.drift_divergence = [a](const Vector&) { return a; };
    model.sigma = Matrix::Constant(1, 1, cfg.custom_sigma);
    model.jump = JumpSpec::none();
    model.prior = {Vector::Constant(1, cfg.custom_prior_mean),
                   Vector::Constant(1, cfg.custom_prior_var)};
    ObservationModel obs(
        1, [](const Vector& x) { return x; },
        Matrix::Constant(1, 1, cfg.custom_obs_var));
    return {std::move(model), std::move(obs)};
  }
  throw std::invalid_argument("unknown experiment: " + cfg.experiment);
}

// Overall root mean square error between estimate rows and truth rows.
inline double rmse(const Matrix& estimates, const Matrix& truth) {
  if (estimates.rows() != truth.rows() || estimates.cols() != truth.cols())
    throw std::invalid_argument("rmse: shape mismatch");
  if (estimates.rows() == 0) throw std::invalid_argument("rmse: empty input");
  return std::sqrt((estimates - truth).rowwise().squaredNorm().mean());
}

inline double rmse(const Matrix& estimates, const Matrix& truth,
                   const std::vector<int>& components) {
  if (estimates.rows() != truth.rows())
    throw std::invalid_argument("rmse: shape mismatch");
  Matrix e(estimates.rows(), components.size());
  Matrix t(truth.rows(), components.size());
  for (size_t j = 0; j < components.size(); ++j) {
    e.col(j) = estimates.col(components[j]);
    t.col(j) = truth.col(components[j]);
  }
  return rmse(e, t);
}

// RMSE components: positions for the 4D tracking experiment unless the full
// state was requested; all components otherwise.
inline std::vector<int> rmse_components(const ExperimentConfig& cfg,
                                        int dim) {
  if (cfg.experiment == "example2" && !cfg.rmse_full_state) return {0, 1};
  std::vector<int> all(dim);
  std::iota(all.begin(), all.end(), 0);
  return all;
}

struct MethodResult {
  std::string name;
  std::vector<double> trial_rmse;     // NaN for failed trials
  std::vector<double> trial_seconds;  // wall clock, filter only
  std::vector<std::string> trial_error;
  double mean_rmse = 0.0;
  double mean_seconds = 0.0;
  int failures = 0;
};

struct TrialTrace {
  Matrix truth;         // n_steps x d (states at t_1..t_n)
  Matrix measurements;  // n_steps x l
  std::vector<Matrix> estimates;  // per method, n_steps x d
};

struct RunResult {
  ExperimentConfig config;
  std::vector<std::string> method_names;
  std::vector<MethodResult> methods;
  std::vector<TrialTrace> traces;
};

namespace detail {

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t trial,
                                 std::uint64_t method) {
  auto s = RngStream(base).substream(trial).substream(method + 1);
  return s();
}

}  // namespace detail

// Runs the configured comparison: per trial, one simulated truth and
// measurement sequence shared by every method, each filter timed separately.
// Trials run in parallel; aggregation is by trial order, so results do not
// depend on the thread count.  A diverged filter flags its trial; the run
// fails only if every trial of a method failed.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto [model, obs] = make_models(cfg);
  const TimeGrid grid = cfg.grid();
  const auto components = rmse_components(cfg, model.dim);

  RunResult result;
  result.config = cfg;
  const bool run_bsde = cfg.method != Method::Apf;
  const bool run_apf = cfg.method != Method::Bsde;
  if (run_bsde)
    result.method_names.push_back("bsde_n" +
                                  std::to_string(cfg.filter.n_points));
  if (run_apf)
    for (int k : cfg.apf_particles)
      result.method_names.push_back("apf_k" + std::to_string(k));
  const int n_methods = static_cast<int>(result.method_names.size());
  result.methods.resize(n_methods);
  for (int m = 0; m < n_methods; ++m) {
    result.methods[m].name = result.method_names[m];
    result.methods[m].trial_rmse.assign(cfg.repeats,
                                        std::numeric_limits<double>::quiet_NaN());
    result.methods[m].trial_seconds.assign(cfg.repeats, 0.0);
    result.methods[m].trial_error.assign(cfg.repeats, "");
  }
  result.traces.resize(cfg.repeats);

  parallel_for(cfg.repeats, cfg.threads, [&](int t) {
    auto trial = RngStream(cfg.seed).substream(t);
    auto sim_rng = trial.substream(0);
    const auto [traj, meas] = simulate_truth(model, obs, grid, sim_rng);
    const Matrix truth = traj.states.bottomRows(grid.n_steps);
    TrialTrace& trace = result.traces[t];
    trace.truth = truth;
    trace.measurements = meas;
    trace.estimates.resize(n_methods);

    int m = 0;
    auto record = [&](int method_index, auto&& run_fn) {
      MethodResult& mr = result.methods[method_index];
      try {
        const auto t0 = std::chrono::steady_clock::now();
        FilterOutput out = run_fn();
        mr.trial_seconds[t] = std::chrono::duration<double>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
        mr.trial_rmse[t] = rmse(out.estimates, truth, components);
        trace.estimates[method_index] = std::move(out.estimates);
      } catch (const FilterDivergence& e) {
        mr.trial_error[t] = e.what();
      } catch (const ApfDegeneracy& e) {
        mr.trial_error[t] = e.what();
      }
    };

    if (run_bsde) {
      record(m, [&] {
        FilterConfig fc = cfg.filter;
        fc.seed = detail::derive_seed(cfg.seed, t, 0);
        return filter_run(model, obs, meas, grid, fc);
      });
      ++m;
    }
    if (run_apf) {
      for (size_t k = 0; k < cfg.apf_particles.size(); ++k) {
        record(m, [&] {
          return apf_run(model, obs, meas, grid, cfg.apf_particles[k],
                         detail::derive_seed(cfg.seed, t, 1 + k));
        });
        ++m;
      }
    }
  });

  for (MethodResult& mr : result.methods) {
    double sum_rmse = 0.0, sum_sec = 0.0;
    int ok = 0;
    for (int t = 0; t < cfg.repeats; ++t) {
      if (std::isnan(mr.trial_rmse[t])) {
        ++mr.failures;
        continue;
      }
      sum_rmse += mr.trial_rmse[t];
      sum_sec += mr.trial_seconds[t];
      ++ok;
    }
    if (ok == 0)
      throw std::runtime_error("all trials failed for method " + mr.name);
    mr.mean_rmse = sum_rmse / ok;
    mr.mean_seconds = sum_sec / ok;
  }
  return result;
}

// ---- artifacts ----

inline void write_results_csv(const RunResult& r, const std::string& path) {
  CsvWriter w(path);
  w.row({"experiment", "trial", "method", "rmse", "status"});
  for (int t = 0; t < r.config.repeats; ++t)
    for (const auto& mr : r.methods)
      w.row({r.config.experiment, std::to_string(t), mr.name,
             std::isnan(mr.trial_rmse[t]) ? "" : fmt_double(mr.trial_rmse[t]),
             std::isnan(mr.trial_rmse[t]) ? ("failed: " + mr.trial_error[t])
                                          : "ok"});
}

inline void write_timing_csv(const RunResult& r, const std::string& path) {
  CsvWriter w(path);
  w.row({"trial", "method", "seconds"});
  for (int t = 0; t < r.config.repeats; ++t)
    for (const auto& mr : r.methods)
      w.row({std::to_string(t), mr.name, fmt_double(mr.trial_seconds[t])});
}

inline void write_trace_csv(const RunResult& r, int trial,
                            const std::string& path) {
  const TrialTrace& trace = r.traces[trial];
  const int d = static_cast<int>(trace.truth.cols());
  const int l = static_cast<int>(trace.measurements.cols());
  const TimeGrid grid = r.config.grid();
  CsvWriter w(path);
  std::vector<std::string> header{"step", "time"};
  for (int j = 0; j < d; ++j) header.push_back("truth_" + std::to_string(j));
  for (int j = 0; j < l; ++j) header.push_back("meas_" + std::to_string(j));
  for (size_t m = 0; m < r.method_names.size(); ++m)
    for (int j = 0; j < d; ++j)
      header.push_back("est_" + r.method_names[m] + "_" + std::to_string(j));
  w.row(header);
  for (int n = 0; n < grid.n_steps; ++n) {
    std::vector<std::string> row{std::to_string(n + 1),
                                 fmt_double(grid.time(n + 1))};
    for (int j = 0; j < d; ++j) row.push_back(fmt_double(trace.truth(n, j)));
    for (int j = 0; j < l; ++j)
      row.push_back(fmt_double(trace.measurements(n, j)));
    for (size_t m = 0; m < r.method_names.size(); ++m) {
      const Matrix& est = trace.estimates[m];
      for (int j = 0; j < d; ++j)
        row.push_back(est.size() == 0 ? "" : fmt_double(est(n, j)));
    }
    w.row(row);
  }
}

// Writes results.csv, timing.csv and per-trial traces under out_dir.
// Numerical artifacts are byte-stable for a fixed config and seed; timing.csv
// holds the wall-clock measurements and varies run to run.
inline void write_run_artifacts(const RunResult& r) {
  namespace fs = std::filesystem;
  fs::create_directories(r.config.out_dir);
  write_results_csv(r, r.config.out_dir + "/results.csv");
  write_timing_csv(r, r.config.out_dir + "/timing.csv");
  if (r.config.write_traces) {
    fs::create_directories(r.config.out_dir + "/traces");
    char name[64];
    for (int t = 0; t < r.config.repeats; ++t) {
      std::snprintf(name, sizeof(name), "/traces/trial_%04d.csv", t);
      write_trace_csv(r, t, r.config.out_dir + name);
    }
  }
}

// Aggregate comparison table, one row per method: text to `out`, and the
// same numbers to a CSV file when csv_path is nonempty.
inline void emit_table(const RunResult& r, std::ostream& out,
                       const std::string& csv_path = "") {
  auto fmt6 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };
  out << "experiment: " << r.config.experiment
      << "  (repeats: " << r.config.repeats << ")\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-24s %20s %14s\n", "method",
                "cpu time (seconds)", "rmse");
  out << line;
  for (const auto& mr : r.methods) {
    std::snprintf(line, sizeof(line), "%-24s %20s %14s\n", mr.name.c_str(),
                  fmt6(mr.mean_seconds).c_str(), fmt6(mr.mean_rmse).c_str());
    out << line;
  }
  if (!csv_path.empty()) {
    CsvWriter w(csv_path);
    w.row({"method", "cpu_seconds", "rmse"});
    for (const auto& mr : r.methods)
      w.row({mr.name, fmt6(mr.mean_seconds), fmt6(mr.mean_rmse)});
  }
}

// Rebuilds the aggregate table from previously written results.csv and
// timing.csv (the `table` subcommand).  Methods keep first-appearance order.
inline void emit_table_from_csv(const std::string& results_path,
                                const std::string& timing_path,
                                std::ostream& out,
                                const std::string& csv_path = "") {
  const auto results = read_csv(results_path);
  const auto timing = read_csv(timing_path);
  if (results.size() < 2 || results[0].size() < 5)
    throw std::runtime_error("malformed results csv: " + results_path);
  if (timing.size() < 2 || timing[0].size() < 3)
    throw std::runtime_error("malformed timing csv: " + timing_path);

  std::vector<std::string> order;
  std::map<std::string, std::pair<double, int>> rmse_acc;   // sum, count
  std::map<std::string, std::pair<double, int>> sec_acc;
  std::string experiment;
  int max_trial = 0;
  for (size_t i = 1; i < results.size(); ++i) {
    const auto& row = results[i];
    experiment = row[0];
    max_trial = std::max(max_trial, std::stoi(row[1]));
    const std::string& method = row[2];
    if (!rmse_acc.count(method)) order.push_back(method);
    if (row[4] == "ok") {
      rmse_acc[method].first += std::stod(row[3]);
      rmse_acc[method].second += 1;
    } else {
      rmse_acc[method];  // keep method registered
    }
  }
  for (size_t i = 1; i < timing.size(); ++i) {
    sec_acc[timing[i][1]].first += std::stod(timing[i][2]);
    sec_acc[timing[i][1]].second += 1;
  }

  auto fmt6 = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };
  out << "experiment: " << experiment << "  (repeats: " << (max_trial + 1)
      << ")\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-24s %20s %14s\n", "method",
                "cpu time (seconds)", "rmse");
  out << line;
  std::vector<std::array<std::string, 3>> rows;
  for (const auto& method : order) {
    const auto& ra = rmse_acc[method];
    const auto& sa = sec_acc[method];
    const std::string rm = ra.second ? fmt6(ra.first / ra.second) : "n/a";
    const std::string sc = sa.second ? fmt6(sa.first / sa.second) : "n/a";
    std::snprintf(line, sizeof(line), "%-24s %20s %14s\n", method.c_str(),
                  sc.c_str(), rm.c_str());
    out << line;
    rows.push_back({method, sc, rm});
  }
  if (!csv_path.empty()) {
    CsvWriter w(csv_path);
    w.row({"method", "cpu_seconds", "rmse"});
    for (const auto& row : rows) w.row({row[0], row[1], row[2]});
  }
}

}  // namespace bsdef
