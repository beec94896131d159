#pragma once

// Layer-count data generation and its reduction to sufficient statistics.
//
// Two independent mechanisms produce the same law:
//  * direct: each layer count is an independent Poisson draw with mean
//    lambda_t * m_i (the independence result for thinned Poisson streams);
//  * mechanistic: draw the beam total, split it multinomially by q and push
//    each mode through the layers by binomial thinning.
// Replication j always draws from substream seed.child(j).

#include <algorithm>
#include <boost/random/binomial_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include <cstdint>
#include <span>
#include <vector>

#include "mmpoisson/error.hpp"
#include "mmpoisson/model.hpp"
#include "mmpoisson/parallel.hpp"
#include "mmpoisson/rng.hpp"

namespace mmpoisson {

using Count = std::int64_t;

/// n replications x k layers, row-major by replication.
struct CountMatrix {
  BeamConfig config;
  std::vector<Count> counts;

  std::size_t replications() const { return config.n; }
  std::size_t layers() const { return config.k; }

  Count at(std::size_t rep, std::size_t layer) const {
    return counts[rep * config.k + layer];
  }
  std::span<const Count> replication(std::size_t rep) const {
    return std::span<const Count>(counts).subspan(rep * config.k, config.k);
  }

  friend bool operator==(const CountMatrix& a, const CountMatrix& b) {
    return a.config.lambda_t == b.config.lambda_t && a.config.n == b.config.n &&
           a.config.k == b.config.k && a.counts == b.counts;
  }
};

struct SufficientStats {
  std::vector<double> b_hat;  // k entries
  std::vector<double> a_hat;  // k + 1 entries, a_hat[0] == 1
};

namespace detail {

inline Count draw_poisson(Xoshiro256& rng, double mean) {
  if (mean <= 0) return 0;
  boost::random::poisson_distribution<Count, double> dist(mean);
  return dist(rng);
}

inline Count draw_binomial(Xoshiro256& rng, Count trials, double prob) {
  if (trials <= 0 || prob <= 0) return 0;
  if (prob >= 1) return trials;
  boost::random::binomial_distribution<Count, double> dist(trials, prob);
  return dist(rng);
}

}  // namespace detail

inline CountMatrix simulate_direct(const ModelParams& params,
                                   const BeamConfig& config, RngSeed seed,
                                   unsigned threads = 1) {
  config.validate();
  const auto m = forward_moments(params, config.k).m;
  // Distribution objects only hold precomputed constants; sharing them
  // read-only across replications is safe.
  std::vector<boost::random::poisson_distribution<Count, double>> layers;
  std::vector<bool> zero_mean(config.k);
  layers.reserve(config.k);
  for (std::size_t i = 0; i < config.k; ++i) {
    const double mean = config.lambda_t * m[i];
    zero_mean[i] = !(mean > 0);
    layers.emplace_back(zero_mean[i] ? 1.0 : mean);
  }

  CountMatrix out{config, std::vector<Count>(config.n * config.k, 0)};
  parallel_for(config.n, threads, [&](std::size_t j) {
    Xoshiro256 rng(seed.child(j));
    Count* row = out.counts.data() + j * config.k;
    for (std::size_t i = 0; i < config.k; ++i) {
      row[i] = zero_mean[i] ? 0 : layers[i](rng);
    }
  });
  return out;
}

struct MechanisticSample {
  CountMatrix data;
  std::vector<Count> beam_totals;  // X_0 per replication
};

inline MechanisticSample simulate_mechanistic_traced(const ModelParams& params,
                                                     const BeamConfig& config,
                                                     RngSeed seed,
                                                     unsigned threads = 1) {
  config.validate();
  const std::size_t s = params.s();
  const auto q = params.q();
  const auto p = params.p();

  MechanisticSample out{CountMatrix{config, std::vector<Count>(config.n * config.k, 0)},
                        std::vector<Count>(config.n, 0)};
  parallel_for(config.n, threads, [&](std::size_t j) {
    Xoshiro256 rng(seed.child(j));
    Count* row = out.data.counts.data() + j * config.k;
    const Count beam = detail::draw_poisson(rng, config.lambda_t);
    out.beam_totals[j] = beam;

    // Multinomial split by conditional binomials.
    Count remaining = beam;
    double mass = 1.0;
    for (std::size_t r = 0; r < s; ++r) {
      Count packet = remaining;
      if (r + 1 < s) {
        const double prob = mass > 0 ? std::min(1.0, q[r] / mass) : 1.0;
        packet = detail::draw_binomial(rng, remaining, prob);
        remaining -= packet;
        mass -= q[r];
      }
      Count surviving = packet;
      for (std::size_t i = 0; i < config.k && surviving > 0; ++i) {
        const Count absorbed = detail::draw_binomial(rng, surviving, 1.0 - p[r]);
        row[i] += absorbed;
        surviving -= absorbed;
      }
    }
  });
  return out;
}

inline CountMatrix simulate_mechanistic(const ModelParams& params,
                                        const BeamConfig& config, RngSeed seed,
                                        unsigned threads = 1) {
  return simulate_mechanistic_traced(params, config, seed, threads).data;
}

/// b_hat_i = sum_j x_ij / (n lambda_t); a_hat_1 = 1, a_hat_(i+1) = a_hat_i - b_hat_i.
/// Column sums are accumulated exactly in 64-bit integers.
inline SufficientStats sufficient_stats(const CountMatrix& data) {
  const auto& cfg = data.config;
  if (cfg.n == 0) throw ValidationError("sufficient_stats needs n >= 1");
  if (!(cfg.lambda_t > 0)) throw ValidationError("sufficient_stats needs lambda_t > 0");
  if (data.counts.size() != cfg.n * cfg.k)
    throw DimensionError("count matrix size does not match its configuration");

  std::vector<Count> totals(cfg.k, 0);
  for (std::size_t j = 0; j < cfg.n; ++j) {
    for (std::size_t i = 0; i < cfg.k; ++i) {
      const Count x = data.at(j, i);
      if (x < 0) throw ValidationError("negative count in data");
      if (__builtin_add_overflow(totals[i], x, &totals[i]))
        throw ValidationError("layer total overflows the count range");
    }
  }

  SufficientStats stats;
  stats.b_hat.resize(cfg.k);
  stats.a_hat.resize(cfg.k + 1);
  const double scale = static_cast<double>(cfg.n) * cfg.lambda_t;
  stats.a_hat[0] = 1.0;
  for (std::size_t i = 0; i < cfg.k; ++i) {
    stats.b_hat[i] = static_cast<double>(totals[i]) / scale;
    stats.a_hat[i + 1] = stats.a_hat[i] - stats.b_hat[i];
  }
  return stats;
}

}  // namespace mmpoisson
