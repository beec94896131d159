#pragma once

// Closed-form solution of the power-sum system
//
//     sum_r y_r z_r^(i-1) = u_i ,  i = 1..2s
//
// (Sylvester-Ramanujan / Prony). The generating function sum_i u_i theta^(i-1)
// equals the rational function
//
//     phi(theta) = (d_1 + d_2 theta + ... + d_s theta^(s-1))
//                / (1 + c_1 theta + ... + c_s theta^s)
//                = sum_r y_r / (1 - z_r theta) .
//
// The denominator coefficients solve a Toeplitz-laid-out Hankel system built
// from u, the nodes z are the reciprocals of its roots and the weights y are
// the partial-fraction residues.
//
// Everything is templated on the floating type so the construction can run in
// extended precision; the CLI and the Monte Carlo drivers use double.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "mmpoisson/error.hpp"
#include "mmpoisson/model.hpp"
#include "mmpoisson/simulator.hpp"

namespace mmpoisson {

template <class T>
using DynMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using DynVector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

inline constexpr double kHankelMaxCondition = 1e12;
inline constexpr double kImagTolerance = 1e-7;
inline constexpr double kNodeSeparation = 1e-6;
inline constexpr double kSolutionSimplexTolerance = 1e-8;

template <std::floating_point T>
struct HankelSystem {
  std::size_t s = 0;
  DynMatrix<T> C;         // C(i, j) = u_(s+i-j), 1-based
  DynMatrix<T> D;         // D(i, j) = u_(i-j) for i > j, else 0
  DynVector<T> rhs_tail;  // (u_(s+1), ..., u_(2s))
  DynVector<T> head;      // (u_1, ..., u_s)
};

template <std::floating_point T>
struct RationalFn {
  std::vector<T> c;  // denominator 1 + c_1 theta + ... + c_s theta^s
  std::vector<T> d;  // numerator d_1 + d_2 theta + ... + d_s theta^(s-1)

  T numerator(T theta) const {
    T acc = 0;
    for (auto it = d.rbegin(); it != d.rend(); ++it) acc = acc * theta + *it;
    return acc;
  }
  T denominator(T theta) const {
    T acc = 0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * theta + *it;
    return acc * theta + T(1);
  }
  T operator()(T theta) const { return numerator(theta) / denominator(theta); }
};

struct SolverDiagnostics {
  double det_C = 0;
  double cond_C = 0;
  double max_imag_discarded = 0;
  double root_separation = std::numeric_limits<double>::infinity();
};

template <std::floating_point T>
struct BasicMomentSolution {
  std::vector<T> y;  // weights, ordered with z
  std::vector<T> z;  // nodes, descending
  bool feasible = false;
  bool clamped = false;  // true when the clamp-to-F heuristic was applied
  SolverDiagnostics diagnostics;

  std::size_t s() const { return z.size(); }
};

using MomentSolution = BasicMomentSolution<double>;

template <std::floating_point T>
struct NodeSet {
  std::vector<T> z;  // descending
  double max_imag_discarded = 0;
};

template <std::floating_point T>
HankelSystem<T> build_hankel(std::span<const T> u, std::size_t s) {
  if (s == 0) throw DimensionError("build_hankel needs s >= 1");
  if (u.size() < 2 * s)
    throw DimensionError("build_hankel needs 2s = " + std::to_string(2 * s) +
                         " power sums, got " + std::to_string(u.size()));
  const auto n = static_cast<Eigen::Index>(s);
  HankelSystem<T> sys;
  sys.s = s;
  sys.C.resize(n, n);
  sys.D = DynMatrix<T>::Zero(n, n);
  sys.rhs_tail.resize(n);
  sys.head.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      sys.C(i, j) = u[static_cast<std::size_t>(n + i - j - 1)];
      if (i > j) sys.D(i, j) = u[static_cast<std::size_t>(i - j - 1)];
    }
    sys.rhs_tail(i) = u[static_cast<std::size_t>(n + i)];
    sys.head(i) = u[static_cast<std::size_t>(i)];
  }
  return sys;
}

namespace detail {

template <class T>
T norm1(const DynMatrix<T>& m) {
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

template <class T>
struct HankelFactor {
  Eigen::PartialPivLU<DynMatrix<T>> lu;
  double det = 0;
  double cond = 0;
};

template <class T>
HankelFactor<T> factor_hankel(const DynMatrix<T>& C) {
  HankelFactor<T> f{Eigen::PartialPivLU<DynMatrix<T>>(C), 0, 0};
  f.det = static_cast<double>(f.lu.determinant());
  const DynMatrix<T> inv = f.lu.inverse();
  const T cond = norm1(C) * norm1(inv);
  f.cond = (f.det == 0 || !std::isfinite(static_cast<double>(cond)))
               ? std::numeric_limits<double>::infinity()
               : static_cast<double>(cond);
  return f;
}

}  // namespace detail

/// Returns (c, d) with u_(s+i) + c_1 u_(s+i-1) + ... + c_s u_i = 0 for
/// i = 1..s, i.e. c = -C^{-1} tail, and d = head + D c.
template <std::floating_point T>
RationalFn<T> solve_coefficients(const HankelSystem<T>& sys,
                                 SolverDiagnostics* diagnostics = nullptr) {
  const auto f = detail::factor_hankel<T>(sys.C);
  if (diagnostics) {
    diagnostics->det_C = f.det;
    diagnostics->cond_C = f.cond;
  }
  if (!(f.cond < kHankelMaxCondition)) throw SingularHankel(f.det, f.cond);

  const DynVector<T> c = -f.lu.solve(sys.rhs_tail);
  const DynVector<T> d = sys.head + sys.D * c;
  return RationalFn<T>{std::vector<T>(c.data(), c.data() + c.size()),
                       std::vector<T>(d.data(), d.data() + d.size())};
}

/// Nodes z_r: reciprocals of the denominator roots, i.e. the roots of the
/// monic z^s + c_1 z^(s-1) + ... + c_s, found as companion-matrix
/// eigenvalues and polished by Newton steps. Sorted descending.
template <std::floating_point T>
NodeSet<T> denominator_roots(std::span<const T> c) {
  const std::size_t s = c.size();
  if (s == 0) throw DimensionError("denominator_roots needs at least one coefficient");
  T scale = 1;
  for (T v : c) scale = std::max(scale, std::abs(v));
  if (std::abs(c[s - 1]) <= T(64) * std::numeric_limits<T>::epsilon() * scale)
    throw DegenerateDegree("denominator degree collapses (c_s = 0): a node is zero");

  std::vector<std::complex<T>> roots;
  if (s == 1) {
    roots.emplace_back(-c[0], T(0));
  } else {
    const auto n = static_cast<Eigen::Index>(s);
    DynMatrix<T> companion = DynMatrix<T>::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) companion(0, j) = -c[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 1; i < n; ++i) companion(i, i - 1) = T(1);
    Eigen::EigenSolver<DynMatrix<T>> es(companion, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
      throw ComplexRoots(std::numeric_limits<double>::infinity());
    for (Eigen::Index i = 0; i < n; ++i) roots.push_back(es.eigenvalues()(i));
  }

  NodeSet<T> out;
  double worst_violation = 0;
  bool complex_found = false;
  for (const auto& root : roots) {
    const double imag = static_cast<double>(std::abs(root.imag()));
    const double allowed = kImagTolerance * (1.0 + static_cast<double>(std::abs(root.real())));
    if (imag > allowed) {
      complex_found = true;
      worst_violation = std::max(worst_violation, imag);
    }
    out.max_imag_discarded = std::max(out.max_imag_discarded, imag);
  }
  if (complex_found) throw ComplexRoots(worst_violation);

  auto poly = [&](T z, T& derivative) {
    T value = 1;
    derivative = 0;
    for (std::size_t i = 0; i < s; ++i) {
      derivative = derivative * z + value;
      value = value * z + c[i];
    }
    return value;
  };
  for (const auto& root : roots) {
    T z = root.real();
    for (int iter = 0; iter < 4; ++iter) {
      T dp;
      const T value = poly(z, dp);
      if (value == 0 || dp == 0) break;
      const T candidate = z - value / dp;
      T unused;
      if (!(std::abs(poly(candidate, unused)) < std::abs(value))) break;
      z = candidate;
    }
    out.z.push_back(z);
  }
  std::sort(out.z.begin(), out.z.end(), std::greater<T>());
  return out;
}

template <std::floating_point T>
T min_separation(std::span<const T> z) {
  T gap = std::numeric_limits<T>::infinity();
  for (std::size_t i = 0; i < z.size(); ++i)
    for (std::size_t j = i + 1; j < z.size(); ++j)
      gap = std::min(gap, std::abs(z[i] - z[j]));
  return gap;
}

/// Residues of phi at theta = 1/z_r:
///     y_r = N(1/z_r) / prod_{j != r} (1 - z_j / z_r)
/// evaluated in the equivalent form  z_r^(s-1) N(1/z_r) / prod_{j != r}(z_r - z_j),
/// which stays finite for small nodes.
template <std::floating_point T>
std::vector<T> partial_fraction_residues(const RationalFn<T>& f,
                                         std::span<const T> z) {
  const std::size_t s = z.size();
  if (f.d.size() != s) throw DimensionError("numerator length must equal node count");
  const T gap = min_separation(z);
  if (s > 1 && !(gap > T(kNodeSeparation)))
    throw IllSeparatedNodes(static_cast<double>(gap));

  std::vector<T> y(s);
  for (std::size_t r = 0; r < s; ++r) {
    T numer = 0;  // sum_j d_j z_r^(s-j), Horner over d_1..d_s
    for (std::size_t j = 0; j < s; ++j) numer = numer * z[r] + f.d[j];
    T denom = 1;
    for (std::size_t j = 0; j < s; ++j)
      if (j != r) denom *= (z[r] - z[j]);
    y[r] = numer / denom;
  }
  return y;
}

template <std::floating_point T>
BasicMomentSolution<T> solve_moment_system(std::span<const T> a_hat, std::size_t s) {
  if (s == 0) throw DimensionError("s must be at least 1");
  if (a_hat.size() != 2 * s)
    throw DimensionError("k = 2s - 1 layers are required: s = " + std::to_string(s) +
                         " needs " + std::to_string(2 * s - 1) + " layers, got " +
                         std::to_string(a_hat.size() == 0 ? 0 : a_hat.size() - 1));

  BasicMomentSolution<T> sol;
  const auto sys = build_hankel(a_hat, s);
  const auto f = solve_coefficients(sys, &sol.diagnostics);
  auto nodes = denominator_roots<T>(f.c);
  sol.diagnostics.max_imag_discarded = nodes.max_imag_discarded;
  sol.diagnostics.root_separation = static_cast<double>(min_separation<T>(nodes.z));
  sol.y = partial_fraction_residues<T>(f, nodes.z);
  sol.z = std::move(nodes.z);
  sol.feasible = validate_feasible<T>(sol.y, sol.z, kSolutionSimplexTolerance).feasible();
  return sol;
}

template <std::floating_point T>
BasicMomentSolution<T> solve_moment_system(const std::vector<T>& a_hat, std::size_t s) {
  return solve_moment_system(std::span<const T>(a_hat), s);
}

inline MomentSolution solve_moment_system(const SufficientStats& stats, std::size_t s) {
  return solve_moment_system(std::span<const double>(stats.a_hat), s);
}

/// Heuristic projection of a raw solution into the parameter space: nodes are
/// clamped into [eps, 1 - eps], weights floored at eps, pairs re-sorted by
/// descending node and weights renormalized. Not part of the estimator.
template <std::floating_point T>
BasicMomentSolution<T> clamp_to_feasible(BasicMomentSolution<T> sol, T eps = T(1e-6)) {
  const std::size_t s = sol.z.size();
  std::vector<std::size_t> order(s);
  std::iota(order.begin(), order.end(), 0);
  for (auto& z : sol.z) z = std::clamp(z, eps, T(1) - eps);
  for (auto& y : sol.y) y = std::max(y, eps);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sol.z[a] > sol.z[b]; });
  std::vector<T> y(s), z(s);
  T total = 0;
  for (std::size_t r = 0; r < s; ++r) total += sol.y[order[r]];
  for (std::size_t r = 0; r < s; ++r) {
    z[r] = sol.z[order[r]];
    y[r] = sol.y[order[r]] / total;
  }
  sol.y = std::move(y);
  sol.z = std::move(z);
  sol.clamped = true;
  sol.feasible = validate_feasible<T>(sol.y, sol.z, kSolutionSimplexTolerance).feasible();
  return sol;
}

/// Converts a feasible solution to model parameters (q = y, p = z).
template <std::floating_point T>
BasicModelParams<T> to_params(const BasicMomentSolution<T>& sol) {
  if (!sol.feasible) throw InfeasibleSolution("solution lies outside the parameter space");
  return BasicModelParams<T>::unchecked(sol.y, sol.z);
}

}  // namespace mmpoisson
