#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "mmpoisson/ramanujan.hpp"
#include "support.hpp"

using namespace mmpoisson;
using testing_support::random_model;
using testing_support::reference_model;

namespace {

const std::vector<double> kReferenceA{1, 0.54, 0.33, 0.2166};

}  // namespace

TEST(BuildHankel, SingleMode) {
  const std::vector<double> a{1, 0.5};
  const auto sys = build_hankel<double>(a, 1);
  EXPECT_EQ(sys.C(0, 0), 1.0);
  EXPECT_EQ(sys.D(0, 0), 0.0);
  EXPECT_EQ(sys.rhs_tail(0), 0.5);
  EXPECT_EQ(sys.head(0), 1.0);
}

TEST(BuildHankel, ReferenceLayout) {
  const auto sys = build_hankel<double>(kReferenceA, 2);
  EXPECT_EQ(sys.C(0, 0), 0.54);
  EXPECT_EQ(sys.C(0, 1), 1.0);
  EXPECT_EQ(sys.C(1, 0), 0.33);
  EXPECT_EQ(sys.C(1, 1), 0.54);
  EXPECT_EQ(sys.rhs_tail(0), 0.33);
  EXPECT_EQ(sys.rhs_tail(1), 0.2166);
  EXPECT_EQ(sys.D(1, 0), 1.0);
  EXPECT_EQ(sys.D(0, 0), 0.0);
  EXPECT_EQ(sys.D(0, 1), 0.0);
  EXPECT_NEAR(sys.C.determinant(), 0.54 * 0.54 - 0.33, 1e-15);
  EXPECT_NEAR(sys.C.determinant(), -0.0384, 1e-15);
}

TEST(BuildHankel, DegenerateNodesAreSingular) {
  const std::vector<double> a{1, 0.5, 0.25, 0.125};
  const auto sys = build_hankel<double>(a, 2);
  EXPECT_EQ(sys.C.determinant(), 0.0);
}

TEST(BuildHankel, TooFewPowerSums) {
  const std::vector<double> a{1, 0.5, 0.25};
  EXPECT_THROW(build_hankel<double>(a, 2), DimensionError);
}

TEST(SolveCoefficients, SingleMode) {
  const std::vector<double> a{1, 0.5};
  const auto f = solve_coefficients(build_hankel<double>(a, 1));
  EXPECT_DOUBLE_EQ(f.c[0], -0.5);
  EXPECT_DOUBLE_EQ(f.d[0], 1.0);
}

TEST(SolveCoefficients, Reference) {
  const auto f = solve_coefficients(build_hankel<double>(kReferenceA, 2));
  EXPECT_NEAR(f.c[0], -1.0, 1e-12);
  EXPECT_NEAR(f.c[1], 0.21, 1e-12);
  EXPECT_NEAR(f.d[0], 1.0, 1e-12);
  EXPECT_NEAR(f.d[1], -0.46, 1e-12);
}

TEST(SolveCoefficients, DenominatorAndNumeratorFactor) {
  // (1 - 0.7 t)(1 - 0.3 t) and 0.6 (1 - 0.3 t) + 0.4 (1 - 0.7 t)
  const auto f = solve_coefficients(build_hankel<double>(kReferenceA, 2));
  for (double t : {-2.0, -0.5, 0.0, 0.4, 1.1, 3.0}) {
    EXPECT_NEAR(f.denominator(t), (1 - 0.7 * t) * (1 - 0.3 * t), 1e-12);
    EXPECT_NEAR(f.numerator(t), 0.6 * (1 - 0.3 * t) + 0.4 * (1 - 0.7 * t), 1e-12);
  }
}

TEST(SolveCoefficients, GeneratingFunctionIdentity) {
  // phi(t) = sum_r q_r / (1 - p_r t) agrees with the rational function.
  const auto f = solve_coefficients(build_hankel<double>(kReferenceA, 2));
  for (double t : {-1.0, 0.2, 0.9, 1.2}) {
    EXPECT_NEAR(f(t), 0.6 / (1 - 0.7 * t) + 0.4 / (1 - 0.3 * t), 1e-12);
  }
}

TEST(SolveCoefficients, RecurrenceResidualsVanish) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t s = 1 + trial % 4;
    const auto params = random_model(rng, s);
    const auto a = power_sums(params, 2 * s).a;
    const auto f = solve_coefficients(build_hankel<double>(a, s));
    for (std::size_t i = 0; i < s; ++i) {
      double residual = a[s + i];
      for (std::size_t l = 0; l < s; ++l) residual += f.c[l] * a[s + i - l - 1];
      EXPECT_NEAR(residual, 0.0, 1e-10);
    }
    EXPECT_NEAR(f.d[0], 1.0, 1e-12);
  }
}

TEST(SolveCoefficients, SingularHankelCarriesDiagnostics) {
  const std::vector<double> a{1, 0.5, 0.25, 0.125};
  SolverDiagnostics diag;
  try {
    solve_coefficients(build_hankel<double>(a, 2), &diag);
    FAIL() << "expected SingularHankel";
  } catch (const SingularHankel& e) {
    EXPECT_EQ(e.det(), 0.0);
    EXPECT_TRUE(std::isinf(e.cond()));
    EXPECT_EQ(e.kind(), ErrorKind::SingularHankel);
  }
  EXPECT_EQ(diag.det_C, 0.0);
}

TEST(DenominatorRoots, Linear) {
  const std::vector<double> c{-0.5};
  const auto nodes = denominator_roots<double>(c);
  ASSERT_EQ(nodes.z.size(), 1u);
  EXPECT_DOUBLE_EQ(nodes.z[0], 0.5);
}

TEST(DenominatorRoots, Quadratic) {
  const std::vector<double> c{-1.0, 0.21};
  const auto nodes = denominator_roots<double>(c);
  EXPECT_NEAR(nodes.z[0], 0.7, 1e-14);
  EXPECT_NEAR(nodes.z[1], 0.3, 1e-14);
}

TEST(DenominatorRoots, ComplexRootsRejected) {
  const std::vector<double> c{0.0, 1.0};
  try {
    denominator_roots<double>(c);
    FAIL() << "expected ComplexRoots";
  } catch (const ComplexRoots& e) {
    EXPECT_NEAR(e.max_imag(), 1.0, 1e-12);
  }
}

TEST(DenominatorRoots, ZeroTrailingCoefficient) {
  const std::vector<double> c{-0.5, 0.0};
  EXPECT_THROW(denominator_roots<double>(c), DegenerateDegree);
}

TEST(DenominatorRoots, RecoversRandomNodes) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t s = 1 + trial % 6;
    const auto params = random_model(rng, s);
    // Coefficients of prod (z - p_r), highest power dropped.
    std::vector<double> poly{1.0};
    for (double p : params.p()) {
      std::vector<double> next(poly.size() + 1, 0.0);
      for (std::size_t i = 0; i < poly.size(); ++i) {
        next[i] += poly[i];
        next[i + 1] -= p * poly[i];
      }
      poly = next;
    }
    const std::vector<double> c(poly.begin() + 1, poly.end());
    const auto nodes = denominator_roots<double>(c);
    for (std::size_t r = 0; r < s; ++r) EXPECT_NEAR(nodes.z[r], params.p()[r], 1e-9);
  }
}

TEST(PartialFractions, SingleMode) {
  const RationalFn<double> f{{-0.5}, {0.8}};
  const std::vector<double> z{0.5};
  EXPECT_EQ(partial_fraction_residues<double>(f, z), (std::vector<double>{0.8}));
}

TEST(PartialFractions, Reference) {
  const RationalFn<double> f{{-1.0, 0.21}, {1.0, -0.46}};
  const std::vector<double> z{0.7, 0.3};
  const auto y = partial_fraction_residues<double>(f, z);
  EXPECT_NEAR(y[0], 0.6, 1e-14);
  EXPECT_NEAR(y[1], 0.4, 1e-14);
  EXPECT_NEAR(y[0] + y[1], f.d[0], 1e-14);
}

TEST(PartialFractions, IllSeparatedNodes) {
  const RationalFn<double> f{{-1.0, 0.25}, {1.0, -0.5}};
  const std::vector<double> z{0.5, 0.5 - 1e-8};
  try {
    partial_fraction_residues<double>(f, z);
    FAIL() << "expected IllSeparatedNodes";
  } catch (const IllSeparatedNodes& e) {
    EXPECT_NEAR(e.min_gap(), 1e-8, 1e-15);
  }
}

TEST(SolveMomentSystem, Reference) {
  const auto sol = solve_moment_system(kReferenceA, 2);
  EXPECT_TRUE(sol.feasible);
  EXPECT_NEAR(sol.y[0], 0.6, 1e-12);
  EXPECT_NEAR(sol.y[1], 0.4, 1e-12);
  EXPECT_NEAR(sol.z[0], 0.7, 1e-12);
  EXPECT_NEAR(sol.z[1], 0.3, 1e-12);
  EXPECT_NEAR(sol.diagnostics.det_C, -0.0384, 1e-14);
  EXPECT_GT(sol.diagnostics.cond_C, 1);
  EXPECT_NEAR(sol.diagnostics.root_separation, 0.4, 1e-12);
}

TEST(SolveMomentSystem, SingleMode) {
  const auto sol = solve_moment_system(std::vector<double>{1, 0.5}, 1);
  EXPECT_TRUE(sol.feasible);
  EXPECT_DOUBLE_EQ(sol.y[0], 1.0);
  EXPECT_DOUBLE_EQ(sol.z[0], 0.5);
}

TEST(SolveMomentSystem, DegenerateModelIsSingular) {
  EXPECT_THROW(solve_moment_system(std::vector<double>{1, 0.5, 0.25, 0.125}, 2), SingularHankel);
}

TEST(SolveMomentSystem, DimensionMismatch) {
  EXPECT_THROW(solve_moment_system(std::vector<double>{1, 0.5, 0.25}, 2), DimensionError);
  SufficientStats st{{0.46, 0.21}, {1, 0.54, 0.33}};
  EXPECT_THROW(solve_moment_system(st, 2), DimensionError);
}

TEST(SolveMomentSystem, RoundTripInDouble) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t s = 1 + trial % 3;
    const auto params = random_model(rng, s);
    const auto sol = solve_moment_system(power_sums(params, 2 * s).a, s);
    ASSERT_TRUE(sol.feasible);
    for (std::size_t r = 0; r < s; ++r) {
      EXPECT_NEAR(sol.y[r], params.q()[r], 1e-8);
      EXPECT_NEAR(sol.z[r], params.p()[r], 1e-8);
    }
  }
}

TEST(SolveMomentSystem, RoundTripInLongDouble) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const auto params = random_model(rng, 4).cast<long double>();
    const auto sol = solve_moment_system(power_sums(params, 8).a, 4);
    ASSERT_TRUE(sol.feasible);
    for (std::size_t r = 0; r < 4; ++r) {
      EXPECT_NEAR(static_cast<double>(sol.y[r] - params.q()[r]), 0.0, 1e-8);
      EXPECT_NEAR(static_cast<double>(sol.z[r] - params.p()[r]), 0.0, 1e-8);
    }
  }
}

TEST(SolveMomentSystem, PermutationInvariance) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t s = 2 + trial % 3;
    const auto params = random_model(rng, s);
    std::vector<std::size_t> perm(s);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> q, p;
    for (auto i : perm) {
      q.push_back(params.q()[i]);
      p.push_back(params.p()[i]);
    }
    const auto shuffled = ModelParams::unchecked(q, p);
    const auto a1 = power_sums(params, 2 * s).a;
    const auto a2 = power_sums(shuffled, 2 * s).a;
    const auto s1 = solve_moment_system(a1, s);
    const auto s2 = solve_moment_system(a2, s);
    for (std::size_t r = 0; r < s; ++r) {
      EXPECT_NEAR(s1.y[r], s2.y[r], 1e-9);
      EXPECT_NEAR(s1.z[r], s2.z[r], 1e-9);
    }
  }
}

TEST(SolveMomentSystem, VandermondeStructureOfHankel) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t s = 1 + trial % 4;
    const auto params = random_model(rng, s);
    const auto a = power_sums(params, 2 * s).a;
    const auto sys = build_hankel<double>(a, s);
    const auto n = static_cast<Eigen::Index>(s);
    Eigen::MatrixXd V(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index r = 0; r < n; ++r) V(i, r) = std::pow(params.p()[r], static_cast<double>(i));
    Eigen::VectorXd q(n);
    for (Eigen::Index r = 0; r < n; ++r) q(r) = params.q()[r];
    const Eigen::MatrixXd H = V * q.asDiagonal() * V.transpose();
    const Eigen::MatrixXd reversed = sys.C.rowwise().reverse();
    EXPECT_LE((reversed - H).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SolveMomentSystem, InfeasibleOutputIsReportedNotThrown) {
  // Power sums of a signed "model" with a negative weight.
  const std::vector<double> q{1.2, -0.2}, p{0.7, 0.3};
  const auto a = power_sums<double>(q, p, 4);
  const auto sol = solve_moment_system(a, 2);
  EXPECT_FALSE(sol.feasible);
  EXPECT_NEAR(sol.y[1], -0.2, 1e-12);
}

TEST(ClampToFeasible, ProducesFeasibleSolution) {
  MomentSolution sol;
  sol.y = {1.1, -0.1};
  sol.z = {1.05, 0.3};
  const auto clamped = clamp_to_feasible(sol);
  EXPECT_TRUE(clamped.clamped);
  EXPECT_TRUE(clamped.feasible);
  EXPECT_LT(clamped.z[0], 1.0);
  EXPECT_GT(clamped.y[1], 0.0);
  EXPECT_NEAR(clamped.y[0] + clamped.y[1], 1.0, 1e-15);
}

TEST(ClampToFeasible, ReordersNodes) {
  MomentSolution sol;
  sol.y = {0.3, 0.7};
  sol.z = {-0.1, 0.5};
  const auto clamped = clamp_to_feasible(sol);
  EXPECT_EQ(clamped.z[0], 0.5);
  EXPECT_EQ(clamped.y[0], 0.7);
}

TEST(ToParams, RequiresFeasibility) {
  MomentSolution sol;
  sol.y = {1.2, -0.2};
  sol.z = {0.7, 0.3};
  EXPECT_THROW(to_params(sol), InfeasibleSolution);
  sol = solve_moment_system(kReferenceA, 2);
  EXPECT_EQ(to_params(sol).s(), 2u);
}
