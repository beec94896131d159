#pragma once

// Monte Carlo study driver: repeated simulate -> estimate over a grid of
// replication counts n, with deterministic per-replication substreams.

#include <array>
#include <chrono>
#include <limits>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mmpoisson/asymptotics.hpp"
#include "mmpoisson/estimate.hpp"
#include "mmpoisson/io.hpp"
#include "mmpoisson/isotonic.hpp"
#include "mmpoisson/parallel.hpp"
#include "mmpoisson/ramanujan.hpp"
#include "mmpoisson/simulator.hpp"
#include "mmpoisson/stats.hpp"

namespace mmpoisson {

enum class SimulationMode { Direct, Mechanistic };

inline SimulationMode parse_mode(const std::string& text) {
  if (text == "direct") return SimulationMode::Direct;
  if (text == "mechanistic") return SimulationMode::Mechanistic;
  throw ParseError("mode must be 'direct' or 'mechanistic', got '" + text + "'");
}

inline std::string to_string(SimulationMode mode) {
  return mode == SimulationMode::Direct ? "direct" : "mechanistic";
}

inline CountMatrix simulate(SimulationMode mode, const ModelParams& params,
                            const BeamConfig& config, RngSeed seed, unsigned threads = 1) {
  return mode == SimulationMode::Direct ? simulate_direct(params, config, seed, threads)
                                        : simulate_mechanistic(params, config, seed, threads);
}

struct StudyConfig {
  ModelParams model;
  BeamConfig beam;  // beam.n is used when n_grid is empty
  std::vector<std::size_t> n_grid;
  std::size_t replications = 1;
  RngSeed seed;
  bool clamp_infeasible = false;
  double level = 0.95;
  SimulationMode mode = SimulationMode::Direct;
  unsigned threads = 1;

  std::vector<std::size_t> grid() const {
    return n_grid.empty() ? std::vector<std::size_t>{beam.n} : n_grid;
  }

  void validate() const {
    if (replications < 1) throw ValidationError("replications must be at least 1");
    if (!(level > 0 && level < 1)) throw ValidationError("level must lie in (0, 1)");
    if (beam.k != 2 * model.s() - 1)
      throw DimensionError("k must equal 2s - 1 for estimation");
    for (auto n : grid())
      if (n == 0) throw ValidationError("every n in the grid must be at least 1");
    beam.validate();
    if (!(beam.lambda_t > 0)) throw ValidationError("lambda_t must be positive");
  }
};

enum class ReplicationStatus { Solved, SolverFailure };

struct ReplicationOutcome {
  ReplicationStatus status = ReplicationStatus::SolverFailure;
  std::string failure;            // error kind when the solver failed
  bool feasible = false;          // feasibility of the estimate used
  std::vector<double> estimate;   // (q_hat, p_hat), 2s entries, when solved
  std::vector<double> q_star;     // isotonic projection of q_hat
  bool coverage_evaluated = false;
  std::vector<bool> covered;      // per component, when evaluated
  double err_before[3] = {0, 0, 0};  // ||q_hat - q||_{1,2,inf}
  double err_after[3] = {0, 0, 0};   // ||q_star - q||_{1,2,inf}
};

struct GridResult {
  std::size_t n = 0;
  std::vector<ReplicationOutcome> replications;

  std::size_t solved() const {
    std::size_t c = 0;
    for (const auto& r : replications) c += r.status == ReplicationStatus::Solved;
    return c;
  }
  std::size_t feasible() const {
    std::size_t c = 0;
    for (const auto& r : replications) c += r.status == ReplicationStatus::Solved && r.feasible;
    return c;
  }
};

struct StudyResult {
  StudyConfig config;
  CovarianceReport truth;  // delta-method covariance at the true parameters
  std::vector<GridResult> grid;
  double wall_seconds = 0;
};

namespace detail {

inline std::array<double, 3> error_norms(std::span<const double> estimate,
                                         std::span<const double> truth) {
  std::array<double, 3> out{0, 0, 0};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = std::abs(estimate[i] - truth[i]);
    out[0] += e;
    out[1] += e * e;
    out[2] = std::max(out[2], e);
  }
  out[1] = std::sqrt(out[1]);
  return out;
}

}  // namespace detail

/// One replication: simulate a data set of size n, estimate, audit.
inline ReplicationOutcome run_replication(const StudyConfig& cfg, std::size_t n, RngSeed seed) {
  const std::size_t s = cfg.model.s();
  BeamConfig beam = cfg.beam;
  beam.n = n;
  const auto data = simulate(cfg.mode, cfg.model, beam, seed);
  const auto stats = sufficient_stats(data);

  ReplicationOutcome out;
  MomentSolution sol;
  try {
    sol = solve_moment_system(stats, s);
  } catch (const Error& e) {
    out.status = ReplicationStatus::SolverFailure;
    out.failure = std::string(to_string(e.kind()));
    return out;
  }
  if (!sol.feasible && cfg.clamp_infeasible) sol = clamp_to_feasible(sol);
  out.status = ReplicationStatus::Solved;
  out.feasible = sol.feasible;
  out.estimate = sol.y;
  out.estimate.insert(out.estimate.end(), sol.z.begin(), sol.z.end());

  out.q_star = project_decreasing(sol.y).q_star;
  const auto before = detail::error_norms(sol.y, cfg.model.q());
  const auto after = detail::error_norms(out.q_star, cfg.model.q());
  std::copy(before.begin(), before.end(), out.err_before);
  std::copy(after.begin(), after.end(), out.err_after);

  if (sol.feasible) {
    try {
      const auto cov = asymptotic_covariance(to_params(sol), beam.lambda_t);
      const auto intervals = wald_intervals(sol, cov, n, cfg.level);
      out.coverage_evaluated = true;
      for (std::size_t c = 0; c < 2 * s; ++c) {
        const double truth = c < s ? cfg.model.q()[c] : cfg.model.p()[c - s];
        out.covered.push_back(intervals[c].contains(truth));
      }
    } catch (const Error&) {
      out.coverage_evaluated = false;
    }
  }
  return out;
}

/// Substream for replication r at grid point g.
inline RngSeed replication_seed(RngSeed base, std::size_t grid_index, std::size_t rep) {
  return base.child(grid_index).child(rep);
}

inline StudyResult run_study(const StudyConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  StudyResult result;
  result.config = cfg;
  result.truth = asymptotic_covariance(cfg.model, cfg.beam.lambda_t);
  const auto grid = cfg.grid();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    GridResult gr;
    gr.n = grid[g];
    gr.replications.resize(cfg.replications);
    parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
      gr.replications[r] = run_replication(cfg, gr.n, replication_seed(cfg.seed, g, r));
    });
    result.grid.push_back(std::move(gr));
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// ---------------------------------------------------------------------------
// Summaries. Component c indexes (q_1..q_s, p_1..p_s) in that order.

inline std::vector<double> truth_vector(const ModelParams& model) {
  std::vector<double> t(model.q().begin(), model.q().end());
  t.insert(t.end(), model.p().begin(), model.p().end());
  return t;
}

/// Rows of sqrt(n) (theta_hat - theta) for solved replications.
inline Eigen::MatrixXd scaled_errors(const GridResult& gr, const ModelParams& model) {
  const auto truth = truth_vector(model);
  const auto solved = gr.solved();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(solved), static_cast<Eigen::Index>(truth.size()));
  Eigen::Index row = 0;
  const double root_n = std::sqrt(static_cast<double>(gr.n));
  for (const auto& r : gr.replications) {
    if (r.status != ReplicationStatus::Solved) continue;
    for (std::size_t c = 0; c < truth.size(); ++c)
      out(row, static_cast<Eigen::Index>(c)) = root_n * (r.estimate[c] - truth[c]);
    ++row;
  }
  return out;
}

/// Root mean squared total error sqrt(mean ||theta_hat - theta||^2) over
/// solved replications.
inline double total_rmse(const GridResult& gr, const ModelParams& model) {
  const auto truth = truth_vector(model);
  std::vector<double> sq;
  for (const auto& r : gr.replications) {
    if (r.status != ReplicationStatus::Solved) continue;
    double total = 0;
    for (std::size_t c = 0; c < truth.size(); ++c) total += std::pow(r.estimate[c] - truth[c], 2);
    sq.push_back(total);
  }
  return sq.empty() ? std::numeric_limits<double>::quiet_NaN() : std::sqrt(stats::mean(sq));
}

inline double predicted_rmse(const CovarianceReport& truth, std::size_t n) {
  return std::sqrt(truth.sigma_sq.trace() / static_cast<double>(n));
}

struct CoverageSummary {
  std::size_t evaluated = 0;
  std::vector<std::size_t> covered;
  double rate(std::size_t c) const {
    return evaluated ? static_cast<double>(covered[c]) / static_cast<double>(evaluated)
                     : std::numeric_limits<double>::quiet_NaN();
  }
};

inline CoverageSummary coverage(const GridResult& gr, std::size_t components) {
  CoverageSummary out{0, std::vector<std::size_t>(components, 0)};
  for (const auto& r : gr.replications) {
    if (!r.coverage_evaluated) continue;
    ++out.evaluated;
    for (std::size_t c = 0; c < components; ++c) out.covered[c] += r.covered[c];
  }
  return out;
}

inline bool is_decreasing(std::span<const double> q) {
  for (std::size_t i = 1; i < q.size(); ++i)
    if (q[i] > q[i - 1]) return false;
  return true;
}

/// Slack for comparing floating-point norms in the error-reduction audit.
inline bool norm_not_larger(double after, double before) {
  return after <= before * (1 + 1e-12) + 1e-15;
}

inline io::Table consistency_table(const StudyResult& res) {
  const std::size_t s = res.config.model.s();
  io::Table t;
  t.header = {"n", "replications", "solved", "feasible", "solver_failures", "rmse",
              "predicted_rmse"};
  for (std::size_t c = 0; c < 2 * s; ++c)
    t.header.push_back(std::string(c < s ? "bias_q" : "bias_p") + std::to_string((c % s) + 1));
  const auto truth = truth_vector(res.config.model);
  for (const auto& gr : res.grid) {
    std::vector<double> row{static_cast<double>(gr.n),
                            static_cast<double>(gr.replications.size()),
                            static_cast<double>(gr.solved()),
                            static_cast<double>(gr.feasible()),
                            static_cast<double>(gr.replications.size() - gr.solved()),
                            total_rmse(gr, res.config.model),
                            predicted_rmse(res.truth, gr.n)};
    for (std::size_t c = 0; c < 2 * s; ++c) {
      std::vector<double> e;
      for (const auto& r : gr.replications)
        if (r.status == ReplicationStatus::Solved) e.push_back(r.estimate[c] - truth[c]);
      row.push_back(e.empty() ? std::numeric_limits<double>::quiet_NaN() : stats::mean(e));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Empirical covariance of sqrt(n) errors at the largest n vs the theory.
inline io::Table covariance_table(const StudyResult& res) {
  io::Table t;
  t.header = {"n", "row", "col", "empirical", "theoretical", "rel_error", "checked"};
  const auto& gr = res.grid.back();
  const auto errors = scaled_errors(gr, res.config.model);
  const Eigen::MatrixXd emp = stats::covariance(errors);
  const Eigen::MatrixXd& theory = res.truth.sigma_sq;
  const double max_entry = theory.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < theory.rows(); ++i) {
    for (Eigen::Index j = i; j < theory.cols(); ++j) {
      const double th = theory(i, j);
      const double em = errors.rows() >= 2 ? emp(i, j) : std::numeric_limits<double>::quiet_NaN();
      const double rel = th != 0 ? std::abs(em - th) / std::abs(th)
                                 : std::numeric_limits<double>::quiet_NaN();
      t.rows.push_back({static_cast<double>(gr.n), static_cast<double>(i + 1),
                        static_cast<double>(j + 1), em, th, rel,
                        std::abs(th) >= 0.1 * max_entry ? 1.0 : 0.0});
    }
  }
  return t;
}

inline io::Table coverage_table(const StudyResult& res) {
  io::Table t;
  t.header = {"n", "component", "level", "evaluated", "covered", "coverage"};
  const std::size_t comps = 2 * res.config.model.s();
  for (const auto& gr : res.grid) {
    const auto cov = coverage(gr, comps);
    for (std::size_t c = 0; c < comps; ++c)
      t.rows.push_back({static_cast<double>(gr.n), static_cast<double>(c + 1), res.config.level,
                        static_cast<double>(cov.evaluated), static_cast<double>(cov.covered[c]),
                        cov.rate(c)});
  }
  return t;
}

inline io::Table normality_table(const StudyResult& res) {
  io::Table t;
  t.header = {"n", "component", "mean_scaled_error", "variance_scaled_error", "skewness"};
  for (const auto& gr : res.grid) {
    const auto errors = scaled_errors(gr, res.config.model);
    for (Eigen::Index c = 0; c < errors.cols(); ++c) {
      std::vector<double> col(errors.col(c).data(), errors.col(c).data() + errors.rows());
      t.rows.push_back({static_cast<double>(gr.n), static_cast<double>(c + 1), stats::mean(col),
                        stats::variance(col), stats::skewness(col)});
    }
  }
  return t;
}

/// Error-reduction audit: fraction of solved replications where the isotonic
/// projection does not increase the l1, l2 and l-infinity error.
inline io::Table isotonic_audit_table(const StudyResult& res) {
  io::Table t;
  t.header = {"n", "evaluated", "l1_holds", "l2_holds", "linf_holds", "mean_l2_before",
              "mean_l2_after", "truth_decreasing"};
  const bool decreasing = is_decreasing(res.config.model.q());
  for (const auto& gr : res.grid) {
    double holds[3] = {0, 0, 0};
    std::vector<double> before, after;
    for (const auto& r : gr.replications) {
      if (r.status != ReplicationStatus::Solved) continue;
      for (int a = 0; a < 3; ++a) holds[a] += norm_not_larger(r.err_after[a], r.err_before[a]);
      before.push_back(r.err_before[1]);
      after.push_back(r.err_after[1]);
    }
    t.rows.push_back({static_cast<double>(gr.n), static_cast<double>(before.size()), holds[0],
                      holds[1], holds[2], stats::mean(before), stats::mean(after),
                      decreasing ? 1.0 : 0.0});
  }
  return t;
}

inline io::Table replications_table(const StudyResult& res) {
  const std::size_t s = res.config.model.s();
  io::Table t;
  t.header = {"n", "rep", "solved", "feasible"};
  for (std::size_t c = 0; c < s; ++c) t.header.push_back("q_" + std::to_string(c + 1));
  for (std::size_t c = 0; c < s; ++c) t.header.push_back("p_" + std::to_string(c + 1));
  for (std::size_t c = 0; c < s; ++c) t.header.push_back("qstar_" + std::to_string(c + 1));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& gr : res.grid) {
    for (std::size_t r = 0; r < gr.replications.size(); ++r) {
      const auto& o = gr.replications[r];
      const bool solved = o.status == ReplicationStatus::Solved;
      std::vector<double> row{static_cast<double>(gr.n), static_cast<double>(r + 1),
                              solved ? 1.0 : 0.0, o.feasible ? 1.0 : 0.0};
      for (std::size_t c = 0; c < 2 * s; ++c) row.push_back(solved ? o.estimate[c] : nan);
      for (std::size_t c = 0; c < s; ++c) row.push_back(solved ? o.q_star[c] : nan);
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

/// Deterministic summary (no timing information).
inline io::json summary_json(const StudyResult& res) {
  io::json grid = io::json::array();
  for (const auto& gr : res.grid) {
    io::json failures = io::json::object();
    for (const auto& r : gr.replications)
      if (r.status == ReplicationStatus::SolverFailure)
        failures[r.failure] = failures.value(r.failure, 0) + 1;
    grid.push_back({{"n", gr.n},
                    {"replications", gr.replications.size()},
                    {"solved_feasible", gr.feasible()},
                    {"solved_infeasible", gr.solved() - gr.feasible()},
                    {"solver_failures", gr.replications.size() - gr.solved()},
                    {"failure_kinds", failures}});
  }
  const auto& cfg = res.config;
  return io::json{{"model",
                   {{"s", cfg.model.s()},
                    {"q", std::vector<double>(cfg.model.q().begin(), cfg.model.q().end())},
                    {"p", std::vector<double>(cfg.model.p().begin(), cfg.model.p().end())}}},
                  {"lambda_t", cfg.beam.lambda_t},
                  {"k", cfg.beam.k},
                  {"seed", cfg.seed.seed},
                  {"mode", to_string(cfg.mode)},
                  {"level", cfg.level},
                  {"clamp_infeasible", cfg.clamp_infeasible},
                  {"theoretical_covariance", io::to_json(res.truth)},
                  {"grid", grid}};
}

}  // namespace mmpoisson
