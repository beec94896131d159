#pragma once

// Order-restricted estimation of a decreasing mode distribution.

#include <Eigen/Dense>
#include <boost/random/normal_distribution.hpp>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mmpoisson/asymptotics.hpp"
#include "mmpoisson/error.hpp"
#include "mmpoisson/parallel.hpp"
#include "mmpoisson/rng.hpp"

namespace mmpoisson {

struct OrderedEstimate {
  std::vector<double> q_star;
  std::vector<double> source;
};

/// Regions of constancy; starts are 1-based.
struct FlatPartition {
  std::size_t region_count = 0;
  std::vector<std::size_t> starts;
  std::vector<std::size_t> lengths;

  std::size_t size() const {
    std::size_t total = 0;
    for (auto v : lengths) total += v;
    return total;
  }

  static FlatPartition singletons(std::size_t s) {
    FlatPartition part;
    for (std::size_t i = 0; i < s; ++i) {
      part.starts.push_back(i + 1);
      part.lengths.push_back(1);
    }
    part.region_count = s;
    return part;
  }

  static FlatPartition single_region(std::size_t s) {
    return FlatPartition{1, {1}, {s}};
  }

  /// Checks the contiguous-cover invariant for a vector of length s.
  void validate(std::size_t s) const {
    if (starts.size() != lengths.size() || starts.size() != region_count)
      throw DimensionError("partition starts/lengths/region_count disagree");
    std::size_t next = 1;
    for (std::size_t j = 0; j < region_count; ++j) {
      if (starts[j] != next || lengths[j] == 0)
        throw DimensionError("partition is not a contiguous cover starting at 1");
      next += lengths[j];
    }
    if (next != s + 1) throw DimensionError("partition does not cover 1..s");
  }

  friend bool operator==(const FlatPartition&, const FlatPartition&) = default;
};

/// Unweighted l2 projection onto decreasing vectors by pool-adjacent-violators:
/// left-to-right sweep, merging the newest block backwards while its mean
/// exceeds the mean of the block before it.
inline OrderedEstimate project_decreasing(std::span<const double> v) {
  struct Block {
    double sum;
    std::size_t count;
    double mean() const { return sum / static_cast<double>(count); }
  };
  std::vector<Block> blocks;
  blocks.reserve(v.size());
  for (double x : v) {
    blocks.push_back({x, 1});
    while (blocks.size() > 1 &&
           blocks[blocks.size() - 2].mean() < blocks.back().mean()) {
      const Block last = blocks.back();
      blocks.pop_back();
      blocks.back().sum += last.sum;
      blocks.back().count += last.count;
    }
  }
  OrderedEstimate out{{}, std::vector<double>(v.begin(), v.end())};
  out.q_star.reserve(v.size());
  for (const auto& b : blocks) out.q_star.insert(out.q_star.end(), b.count, b.mean());
  return out;
}

inline OrderedEstimate project_decreasing(const std::vector<double>& v) {
  return project_decreasing(std::span<const double>(v));
}

/// Maximal runs of values equal within tol. Throws when q increases by more
/// than tol anywhere.
inline FlatPartition flat_regions(std::span<const double> q, double tol = 1e-12) {
  FlatPartition part;
  if (q.empty()) return part;
  part.starts.push_back(1);
  part.lengths.push_back(1);
  for (std::size_t i = 1; i < q.size(); ++i) {
    if (q[i] > q[i - 1] + tol)
      throw ValidationError("vector is not decreasing at position " + std::to_string(i + 1));
    if (std::abs(q[i] - q[i - 1]) <= tol) {
      ++part.lengths.back();
    } else {
      part.starts.push_back(i + 1);
      part.lengths.push_back(1);
    }
  }
  part.region_count = part.starts.size();
  return part;
}

inline FlatPartition flat_regions(const std::vector<double>& q, double tol = 1e-12) {
  return flat_regions(std::span<const double>(q), tol);
}

/// Separate isotonic regressions over each region; no order is imposed across
/// region boundaries.
inline std::vector<double> phi_map(std::span<const double> y, const FlatPartition& partition) {
  partition.validate(y.size());
  std::vector<double> out;
  out.reserve(y.size());
  for (std::size_t j = 0; j < partition.region_count; ++j) {
    const auto slice = y.subspan(partition.starts[j] - 1, partition.lengths[j]);
    if (slice.size() == 1) {
      out.push_back(slice[0]);
      continue;
    }
    const auto projected = project_decreasing(slice).q_star;
    out.insert(out.end(), projected.begin(), projected.end());
  }
  return out;
}

inline std::vector<double> phi_map(const std::vector<double>& y, const FlatPartition& partition) {
  return phi_map(std::span<const double>(y), partition);
}

/// Factor A with A A^T = sigma, via a symmetric eigendecomposition. Rounding
/// negatives down to -1e-10 * trace are clipped to zero.
inline MatrixXd psd_factor(const MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols()) throw DimensionError("covariance must be square");
  check_psd(sigma);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(sigma));
  const VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

/// Draws reps vectors from phi(N(0, sigma_qq)); row i uses substream seed.child(i).
inline MatrixXd sample_limit_law(const MatrixXd& sigma_qq, const FlatPartition& partition,
                                 std::size_t reps, RngSeed seed, unsigned threads = 1) {
  const auto s = static_cast<std::size_t>(sigma_qq.rows());
  partition.validate(s);
  const MatrixXd A = psd_factor(sigma_qq);
  MatrixXd out(static_cast<Eigen::Index>(reps), static_cast<Eigen::Index>(s));
  parallel_for(reps, threads, [&](std::size_t i) {
    Xoshiro256 rng(seed.child(i));
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    VectorXd z(static_cast<Eigen::Index>(s));
    for (Eigen::Index c = 0; c < z.size(); ++c) z(c) = normal(rng);
    const VectorXd x = A * z;
    const auto mapped = phi_map(std::span<const double>(x.data(), s), partition);
    for (std::size_t c = 0; c < s; ++c)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = mapped[c];
  });
  return out;
}

}  // namespace mmpoisson
