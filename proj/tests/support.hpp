#pragma once

// Shared helpers for the test suites: random model generation and
// independent reference computations.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "mmpoisson/model.hpp"

namespace testing_support {

inline mmpoisson::ModelParams reference_model() {
  return mmpoisson::ModelParams::make({0.6, 0.4}, {0.7, 0.3});
}

inline mmpoisson::ModelParams flat_model() {
  return mmpoisson::ModelParams::make({0.5, 0.5}, {0.7, 0.3});
}

/// Random valid model with p gaps >= min_gap and q entries >= min_q.
/// p is drawn in [0.02, 0.98].
template <class Rng>
mmpoisson::ModelParams random_model(Rng& rng, std::size_t s, double min_gap = 0.05,
                                    double min_q = 0.05) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> p(s), q(s);
  for (;;) {
    for (auto& v : p) v = 0.02 + 0.96 * unit(rng);
    std::sort(p.begin(), p.end(), std::greater<>());
    bool ok = true;
    for (std::size_t i = 0; i + 1 < s; ++i) ok = ok && p[i] - p[i + 1] >= min_gap;
    if (ok) break;
  }
  for (;;) {
    double total = 0;
    for (auto& v : q) {
      v = -std::log(1.0 - unit(rng));
      total += v;
    }
    for (auto& v : q) v /= total;
    if (*std::min_element(q.begin(), q.end()) >= min_q) break;
  }
  // Push the rounding residue onto the largest weight so the simplex holds.
  double total = 0;
  for (double v : q) total += v;
  *std::max_element(q.begin(), q.end()) += 1.0 - total;
  return mmpoisson::ModelParams::make(q, p);
}

/// Term-by-term evaluation of layer moments with std::pow.
inline std::vector<double> moments_by_pow(const std::vector<double>& q,
                                          const std::vector<double>& p, std::size_t k) {
  std::vector<double> m(k, 0.0);
  for (std::size_t i = 1; i <= k; ++i)
    for (std::size_t r = 0; r < q.size(); ++r)
      m[i - 1] += (1 - p[r]) * std::pow(p[r], static_cast<double>(i - 1)) * q[r];
  return m;
}

inline std::vector<double> power_sums_by_pow(const std::vector<double>& q,
                                             const std::vector<double>& p, std::size_t len) {
  std::vector<double> a(len, 0.0);
  for (std::size_t i = 1; i <= len; ++i)
    for (std::size_t r = 0; r < q.size(); ++r)
      a[i - 1] += q[r] * std::pow(p[r], static_cast<double>(i - 1));
  return a;
}

/// Exhaustive decreasing least-squares fit: every contiguous block partition
/// is tried, blocks are replaced by their means, and the best decreasing
/// candidate wins.
inline std::vector<double> brute_force_decreasing(const std::vector<double>& v) {
  const std::size_t s = v.size();
  std::vector<double> best;
  double best_sse = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << (s - 1)); ++mask) {
    std::vector<double> fit(s);
    std::size_t start = 0;
    for (std::size_t i = 0; i < s; ++i) {
      const bool cut = i + 1 == s || (mask >> i) & 1u;
      if (!cut) continue;
      double total = 0;
      for (std::size_t j = start; j <= i; ++j) total += v[j];
      const double mean = total / static_cast<double>(i - start + 1);
      for (std::size_t j = start; j <= i; ++j) fit[j] = mean;
      start = i + 1;
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < s; ++i) decreasing = decreasing && fit[i] <= fit[i - 1];
    if (!decreasing) continue;
    double sse = 0;
    for (std::size_t i = 0; i < s; ++i) sse += (fit[i] - v[i]) * (fit[i] - v[i]);
    if (sse < best_sse) {
      best_sse = sse;
      best = fit;
    }
  }
  return best;
}

inline std::vector<double> to_vector(std::span<const double> x) {
  return std::vector<double>(x.begin(), x.end());
}

}  // namespace testing_support
