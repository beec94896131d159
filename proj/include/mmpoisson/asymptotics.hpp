#pragma once

// Delta-method asymptotics of the closed-form estimator.
//
// psi maps power sums u = (u_1..u_2s) to (q, p) implicitly through
// F_i(q, p, u) = sum_r q_r p_r^(i-1) - u_i = 0. With J = dF/d(q,p) and
// dF/du = -I, the implicit function theorem gives dpsi = J^{-1}.
//
// sqrt(n) (a_hat_(2..2s) - a_(2..2s)) -> N(0, L Sigma_m L^T), with L the lower
// triangular matrix of ones and Sigma_m = diag(m_1..m_(2s-1)) / lambda_t, so
//
//     Sigma^2 = dpsi[:, 2:2s] L Sigma_m L^T dpsi[:, 2:2s]^T .

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "mmpoisson/error.hpp"
#include "mmpoisson/model.hpp"
#include "mmpoisson/ramanujan.hpp"

namespace mmpoisson {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kPsdRelativeTolerance = 1e-10;

/// J(i, r) = p_r^(i-1) and J(i, s+r) = (i-1) q_r p_r^(i-2), rows i = 1..2s.
inline MatrixXd jacobian(const ModelParams& params) {
  const auto s = static_cast<Eigen::Index>(params.s());
  const auto q = params.q();
  const auto p = params.p();
  MatrixXd J = MatrixXd::Zero(2 * s, 2 * s);
  for (Eigen::Index r = 0; r < s; ++r) {
    double power = 1;       // p^(i-1)
    double power_prev = 0;  // p^(i-2)
    for (Eigen::Index i = 0; i < 2 * s; ++i) {
      J(i, r) = power;
      J(i, s + r) = static_cast<double>(i) * q[r] * power_prev;
      power_prev = power;
      power *= p[r];
    }
  }
  return J;
}

namespace detail {

inline std::string describe_jacobian_degeneracy(const ModelParams& params) {
  const auto q = params.q();
  const auto p = params.p();
  std::ostringstream msg;
  msg << "system Jacobian is singular";
  std::size_t best_i = 0, best_j = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      if (std::abs(p[i] - p[j]) < best_gap) {
        best_gap = std::abs(p[i] - p[j]);
        best_i = i;
        best_j = j;
      }
  if (p.size() > 1)
    msg << "; closest thinning probabilities p_" << best_i + 1 << " and p_"
        << best_j + 1 << " differ by " << best_gap;
  const auto min_q = std::min_element(q.begin(), q.end());
  msg << "; smallest weight q_" << (min_q - q.begin()) + 1 << " = " << *min_q;
  return msg.str();
}

}  // namespace detail

/// dpsi = J^{-1}: column j is the response of (q, p) to a unit change in u_j.
inline MatrixXd implicit_derivatives(const ModelParams& params) {
  const MatrixXd J = jacobian(params);
  Eigen::FullPivLU<MatrixXd> lu(J);
  const double det = lu.determinant();
  if (!lu.isInvertible() || det == 0 || !std::isfinite(det) ||
      lu.rcond() < 1e3 * std::numeric_limits<double>::epsilon())
    throw SingularJacobian(detail::describe_jacobian_degeneracy(params));
  // Solved in extended precision: entries of J^{-1} grow quickly as nodes
  // approach each other and a double solve leaves residuals near 1e-9.
  using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const LongMatrix wide = J.cast<long double>();
  const LongMatrix inv = Eigen::FullPivLU<LongMatrix>(wide).solve(
      LongMatrix::Identity(J.rows(), J.cols()));
  return inv.cast<double>();
}

struct CovarianceReport {
  MatrixXd sigma_sq;  // 2s x 2s, covariance of sqrt(n) ((q_hat, p_hat) - (q, p))
  MatrixXd sigma_A;   // (2s-1) x (2s-1)
  MatrixXd dpsi;      // 2s x 2s
  double lambda_t = 0;
};

inline MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

/// Throws NotPositiveSemidefinite when the smallest eigenvalue is below
/// -1e-10 * trace; returns the smallest eigenvalue otherwise.
inline double check_psd(const MatrixXd& m) {
  if (m.size() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m), Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  const double trace = std::abs(m.trace());
  if (min_eig < -kPsdRelativeTolerance * trace) throw NotPositiveSemidefinite(min_eig);
  return min_eig;
}

inline CovarianceReport asymptotic_covariance(const ModelParams& params, double lambda_t) {
  if (!(lambda_t > 0) || !std::isfinite(lambda_t))
    throw ValidationError("lambda_t must be positive");
  const std::size_t s = params.s();
  const auto k = static_cast<Eigen::Index>(2 * s - 1);

  CovarianceReport report;
  report.lambda_t = lambda_t;
  report.dpsi = implicit_derivatives(params);

  const auto m = forward_moments(params, 2 * s - 1).m;
  VectorXd sigma_m(k);
  for (Eigen::Index i = 0; i < k; ++i) sigma_m(i) = m[static_cast<std::size_t>(i)] / lambda_t;
  const MatrixXd L = MatrixXd::Ones(k, k).triangularView<Eigen::Lower>();
  report.sigma_A = symmetrize(L * sigma_m.asDiagonal() * L.transpose());

  // a_hat_1 == 1 is deterministic, so its column of dpsi does not contribute.
  const MatrixXd dpsi_tail = report.dpsi.rightCols(k);
  report.sigma_sq = symmetrize(dpsi_tail * report.sigma_A * dpsi_tail.transpose());
  check_psd(report.sigma_sq);
  return report;
}

/// det J / (prod_r q_r * prod_{i<j} (p_i - p_j)^4). Depends on s only.
inline double det_factorization_ratio(const ModelParams& params) {
  const MatrixXd J = jacobian(params);
  const double det = Eigen::PartialPivLU<MatrixXd>(J).determinant();
  double denom = 1;
  for (double q : params.q()) denom *= q;
  const auto p = params.p();
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) denom *= std::pow(p[i] - p[j], 4);
  return det / denom;
}

struct WaldInterval {
  double estimate = 0;
  double lower = 0;
  double upper = 0;
  double std_error = 0;

  bool contains(double value) const { return lower <= value && value <= upper; }
};

inline double normal_quantile(double prob) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
}

/// Intervals for (q_1..q_s, p_1..p_s): estimate +- z_(1+level)/2 sqrt(Sigma^2_cc / n).
inline std::vector<WaldInterval> wald_intervals(const MomentSolution& solution,
                                                const CovarianceReport& report,
                                                std::size_t n, double level) {
  if (!(level > 0 && level < 1)) throw ValidationError("level must lie in (0, 1)");
  if (n == 0) throw ValidationError("n must be at least 1");
  if (!solution.feasible)
    throw InfeasibleSolution("Wald intervals need a feasible solution");
  const std::size_t s = solution.s();
  if (report.sigma_sq.rows() != static_cast<Eigen::Index>(2 * s))
    throw DimensionError("covariance dimension does not match the solution");

  const double z = normal_quantile(0.5 + level / 2);
  std::vector<WaldInterval> out(2 * s);
  for (std::size_t c = 0; c < 2 * s; ++c) {
    const double est = c < s ? solution.y[c] : solution.z[c - s];
    const auto idx = static_cast<Eigen::Index>(c);
    const double se = std::sqrt(std::max(0.0, report.sigma_sq(idx, idx)) / static_cast<double>(n));
    out[c] = WaldInterval{est, est - z * se, est + z * se, se};
  }
  return out;
}

}  // namespace mmpoisson
