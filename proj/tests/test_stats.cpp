#include <gtest/gtest.h>

#include <random>

#include "mmpoisson/stats.hpp"

using namespace mmpoisson;

TEST(Stats, CompensatedSum) {
  std::vector<double> x{1e16, 1.0, -1e16, 1.0};
  EXPECT_EQ(stats::sum(x), 2.0);
}

TEST(Stats, MomentsOfSmallSample) {
  const std::vector<double> x{1, 2, 3, 4, 10};
  EXPECT_DOUBLE_EQ(stats::mean(x), 4.0);
  EXPECT_DOUBLE_EQ(stats::variance(x), 12.5);
  EXPECT_GT(stats::skewness(x), 0.0);
  const std::vector<double> sym{-2, -1, 0, 1, 2};
  EXPECT_NEAR(stats::skewness(sym), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(stats::rmse(std::vector<double>{3, -4}), std::sqrt(12.5));
}

TEST(Stats, CovarianceOfColumns) {
  Eigen::MatrixXd x(4, 2);
  x << 1, 2, 2, 4, 3, 6, 4, 8;
  const auto c = stats::covariance(x);
  EXPECT_NEAR(c(0, 0), 5.0 / 3, 1e-15);
  EXPECT_NEAR(c(0, 1), 10.0 / 3, 1e-15);
  EXPECT_NEAR(c(1, 1), 20.0 / 3, 1e-14);
}

TEST(Stats, KolmogorovSurvivalKnownPoints) {
  EXPECT_NEAR(stats::kolmogorov_survival(1.3581), 0.05, 1e-4);
  EXPECT_NEAR(stats::kolmogorov_survival(1.6276), 0.01, 1e-4);
  EXPECT_EQ(stats::kolmogorov_survival(0.0), 1.0);
}

TEST(Stats, KsIdenticalAndDisjointSamples) {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const auto same = stats::ks_two_sample(a, a);
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_EQ(same.p_value, 1.0);
  std::vector<double> lo(200), hi(200);
  for (int i = 0; i < 200; ++i) {
    lo[i] = i;
    hi[i] = 1000 + i;
  }
  const auto apart = stats::ks_two_sample(lo, hi);
  EXPECT_EQ(apart.statistic, 1.0);
  EXPECT_LT(apart.p_value, 1e-20);
}

TEST(Stats, KsHandlesTies) {
  const std::vector<double> a{0, 0, 0, 1};
  const std::vector<double> b{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(stats::ks_two_sample(a, b).statistic, 0.25);
}

TEST(Stats, KsNullRejectionRateIsCalibrated) {
  std::mt19937_64 rng(73);
  std::normal_distribution<double> normal;
  int rejections = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> a(300), b(500);
    for (auto& v : a) v = normal(rng);
    for (auto& v : b) v = normal(rng);
    rejections += stats::ks_two_sample(a, b).p_value < 0.05;
  }
  const double rate = static_cast<double>(rejections) / trials;
  EXPECT_GT(rate, 0.02);
  EXPECT_LT(rate, 0.09);
}
