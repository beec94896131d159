#pragma once

// Parameter space of the multimode thinning model and its forward maps.
//
// A beam with mode distribution q passes through k layers; a particle of
// mode r survives each layer with probability p_r. The expected absorbed
// count at layer i, divided by lambda*t, is
//
//     m_i = sum_r (1 - p_r) p_r^(i-1) q_r ,
//
// and the generalized power sums a_i = sum_r q_r p_r^(i-1) telescope against
// it: a_(i+1) = a_i - m_i.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mmpoisson/error.hpp"

namespace mmpoisson {

inline constexpr double kSimplexTolerance = 1e-12;
inline constexpr double kOrderGap = 1e-10;
// Upper bound on lambda*t; Poisson draws beyond this no longer fit the
// 64-bit count range with useful resolution.
inline constexpr double kMaxLambdaT = 1e15;

struct FeasibilityReport {
  bool same_length = false;
  bool nonempty = false;
  bool simplex = false;
  bool positive_q = false;
  bool p_in_unit_interval = false;
  bool p_strictly_descending = false;
  double simplex_residual = std::numeric_limits<double>::infinity();
  double min_p_gap = std::numeric_limits<double>::infinity();

  bool feasible() const {
    return same_length && nonempty && simplex && positive_q &&
           p_in_unit_interval && p_strictly_descending;
  }

  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (!same_length) out.emplace_back("q and p have different lengths");
    if (!nonempty) out.emplace_back("s must be at least 1");
    if (!simplex)
      out.emplace_back("simplex: q must sum to 1 (residual " +
                       std::to_string(simplex_residual) + ")");
    if (!positive_q) out.emplace_back("positivity: every q_r must be > 0");
    if (!p_in_unit_interval)
      out.emplace_back("range: every p_r must lie in (0, 1)");
    if (!p_strictly_descending)
      out.emplace_back("ordering: p must be strictly descending (min gap " +
                       std::to_string(min_p_gap) + ")");
    return out;
  }
};

/// Checks every constraint of the parameter space independently. The simplex
/// tolerance defaults to 1e-12; the solver classifies its own output with a
/// looser bound.
template <std::floating_point T>
FeasibilityReport validate_feasible(std::span<const T> q, std::span<const T> p,
                                    double simplex_tol = kSimplexTolerance) {
  FeasibilityReport r;
  r.same_length = q.size() == p.size();
  r.nonempty = !q.empty() && !p.empty();
  if (!r.same_length || !r.nonempty) return r;

  T sum = 0;
  for (T v : q) sum += v;
  r.simplex_residual = static_cast<double>(std::abs(sum - T(1)));
  r.simplex = r.simplex_residual <= simplex_tol;
  r.positive_q = std::all_of(q.begin(), q.end(), [](T v) { return v > 0; });
  r.p_in_unit_interval =
      std::all_of(p.begin(), p.end(), [](T v) { return v > 0 && v < 1; });
  r.p_strictly_descending = true;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const double gap = static_cast<double>(p[i] - p[i + 1]);
    r.min_p_gap = std::min(r.min_p_gap, gap);
    if (!(gap > kOrderGap)) r.p_strictly_descending = false;
  }
  return r;
}

template <std::floating_point T>
FeasibilityReport validate_feasible(const std::vector<T>& q,
                                    const std::vector<T>& p,
                                    double simplex_tol = kSimplexTolerance) {
  return validate_feasible(std::span<const T>(q), std::span<const T>(p),
                           simplex_tol);
}

/// A point (q, p) of the parameter space. Instances built through `make`
/// are always feasible; `unchecked` skips the checks for tests that need
/// permuted or otherwise out-of-order inputs.
template <std::floating_point T>
class BasicModelParams {
 public:
  BasicModelParams() = default;

  static BasicModelParams make(std::vector<T> q, std::vector<T> p) {
    const auto report = validate_feasible<T>(q, p);
    if (!report.feasible()) {
      throw ValidationError("invalid model parameters: " +
                            report.violations().front());
    }
    return BasicModelParams(std::move(q), std::move(p));
  }

  static BasicModelParams unchecked(std::vector<T> q, std::vector<T> p) {
    if (q.size() != p.size() || q.empty()) {
      throw DimensionError("q and p must be non-empty and of equal length");
    }
    return BasicModelParams(std::move(q), std::move(p));
  }

  std::size_t s() const { return q_.size(); }
  std::span<const T> q() const { return q_; }
  std::span<const T> p() const { return p_; }

  template <std::floating_point U>
  BasicModelParams<U> cast() const {
    return BasicModelParams<U>::unchecked(std::vector<U>(q_.begin(), q_.end()),
                                          std::vector<U>(p_.begin(), p_.end()));
  }

  friend bool operator==(const BasicModelParams&, const BasicModelParams&) = default;

 private:
  BasicModelParams(std::vector<T> q, std::vector<T> p)
      : q_(std::move(q)), p_(std::move(p)) {}

  std::vector<T> q_;
  std::vector<T> p_;
};

using ModelParams = BasicModelParams<double>;

/// Beam intensity times exposure, replication count and layer count.
struct BeamConfig {
  double lambda_t = 0;
  std::size_t n = 0;
  std::size_t k = 0;

  void validate() const {
    if (!std::isfinite(lambda_t) || lambda_t < 0)
      throw ValidationError("lambda_t must be a finite non-negative number");
    if (lambda_t > kMaxLambdaT)
      throw ValidationError("lambda_t overflows the count range");
    if (n == 0) throw ValidationError("n must be at least 1");
    if (k == 0) throw ValidationError("k must be at least 1");
  }
};

template <std::floating_point T>
struct BasicMomentVector {
  std::vector<T> m;
};

template <std::floating_point T>
struct BasicPowerSums {
  std::vector<T> a;
};

using MomentVector = BasicMomentVector<double>;
using PowerSums = BasicPowerSums<double>;

/// Layer moments m_1..m_k on raw (q, p); no ordering is enforced, so this is
/// also the entry point for permutation checks.
template <std::floating_point T>
std::vector<T> forward_moments(std::span<const T> q, std::span<const T> p,
                               std::size_t k) {
  if (q.size() != p.size()) throw DimensionError("q and p differ in length");
  std::vector<T> m(k, T(0));
  for (std::size_t r = 0; r < q.size(); ++r) {
    T weight = (T(1) - p[r]) * q[r];
    for (std::size_t i = 0; i < k; ++i) {
      m[i] += weight;
      weight *= p[r];
    }
  }
  return m;
}

template <std::floating_point T>
BasicMomentVector<T> forward_moments(const BasicModelParams<T>& params,
                                     std::size_t k) {
  return {forward_moments<T>(params.q(), params.p(), k)};
}

template <std::floating_point T>
std::vector<T> power_sums(std::span<const T> q, std::span<const T> p,
                          std::size_t len) {
  if (q.size() != p.size()) throw DimensionError("q and p differ in length");
  std::vector<T> a(len, T(0));
  for (std::size_t r = 0; r < q.size(); ++r) {
    T term = q[r];
    for (std::size_t i = 0; i < len; ++i) {
      a[i] += term;
      term *= p[r];
    }
  }
  return a;
}

template <std::floating_point T>
BasicPowerSums<T> power_sums(const BasicModelParams<T>& params, std::size_t len) {
  if (len == 0) throw DimensionError("power_sums needs len >= 1");
  return {power_sums<T>(params.q(), params.p(), len)};
}

}  // namespace mmpoisson
