#pragma once

// Summary statistics used by the Monte Carlo drivers and the test suites.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace mmpoisson::stats {

/// Neumaier-compensated sum.
inline double sum(std::span<const double> x) {
  double total = 0;
  double carry = 0;
  for (double v : x) {
    const double t = total + v;
    if (std::abs(total) >= std::abs(v))
      carry += (total - t) + v;
    else
      carry += (v - t) + total;
    total = t;
  }
  return total + carry;
}

inline double mean(std::span<const double> x) {
  return x.empty() ? 0.0 : sum(x) / static_cast<double>(x.size());
}

/// Central moment of the given order around the sample mean (divides by n).
inline double central_moment(std::span<const double> x, int order) {
  const double mu = mean(x);
  std::vector<double> d(x.size());
  std::transform(x.begin(), x.end(), d.begin(),
                 [&](double v) { return std::pow(v - mu, order); });
  return mean(d);
}

/// Unbiased sample variance.
inline double variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  return central_moment(x, 2) * static_cast<double>(x.size()) /
         static_cast<double>(x.size() - 1);
}

inline double skewness(std::span<const double> x) {
  const double m2 = central_moment(x, 2);
  if (m2 <= 0) return 0.0;
  return central_moment(x, 3) / std::pow(m2, 1.5);
}

inline double rmse(std::span<const double> errors) {
  std::vector<double> sq(errors.size());
  std::transform(errors.begin(), errors.end(), sq.begin(), [](double e) { return e * e; });
  return std::sqrt(mean(sq));
}

/// Sample covariance (n - 1 denominator) of the rows of `samples`.
inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows();
  if (n < 2) return Eigen::MatrixXd::Zero(samples.cols(), samples.cols());
  const Eigen::RowVectorXd mu = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - mu;
  return (centered.transpose() * centered) / static_cast<double>(n - 1);
}

/// Survival function of the Kolmogorov distribution, P(K > x).
inline double kolmogorov_survival(double x) {
  if (x <= 0) return 1.0;
  if (x < 0.2) return 1.0;
  double total = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    total += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(total, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0;
  double p_value = 1;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value. Tied
/// values are stepped over together.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_survival((en + 0.12 + 0.11 / en) * d)};
}

}  // namespace mmpoisson::stats
