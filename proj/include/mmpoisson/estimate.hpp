#pragma once

// Full estimation from sufficient statistics: solve the moment system, attach
// plug-in delta-method covariance and Wald intervals, and project q onto
// decreasing vectors.

#include <optional>
#include <string>
#include <vector>

#include "mmpoisson/asymptotics.hpp"
#include "mmpoisson/isotonic.hpp"
#include "mmpoisson/ramanujan.hpp"
#include "mmpoisson/simulator.hpp"

namespace mmpoisson {

struct EstimateOptions {
  double level = 0.95;
  bool clamp_infeasible = false;
  // Tolerance for reading flat regions off the projected estimate. Regions
  // found this way are a heuristic, not the true partition.
  double partition_tol = 1e-12;
};

struct EstimateReport {
  std::size_t n = 0;
  double lambda_t = 0;
  MomentSolution raw;       // solver output before any post-processing
  MomentSolution solution;  // raw, or clamped when requested
  std::optional<CovarianceReport> covariance;  // at the estimate, feasible only
  std::vector<WaldInterval> intervals;
  OrderedEstimate ordered;  // isotonic projection of solution.y
  FlatPartition ordered_partition;
};

inline EstimateReport estimate(const SufficientStats& stats, std::size_t s, std::size_t n,
                               double lambda_t, const EstimateOptions& options = {}) {
  if (!(options.level > 0 && options.level < 1))
    throw ValidationError("level must lie in (0, 1)");
  EstimateReport report;
  report.n = n;
  report.lambda_t = lambda_t;
  report.raw = solve_moment_system(stats, s);
  report.solution = report.raw;
  if (!report.raw.feasible && options.clamp_infeasible)
    report.solution = clamp_to_feasible(report.raw);

  if (report.solution.feasible) {
    const auto plug_in = to_params(report.solution);
    report.covariance = asymptotic_covariance(plug_in, lambda_t);
    report.intervals = wald_intervals(report.solution, *report.covariance, n, options.level);
  }
  report.ordered = project_decreasing(report.solution.y);
  report.ordered_partition = flat_regions(report.ordered.q_star, options.partition_tol);
  return report;
}

}  // namespace mmpoisson
