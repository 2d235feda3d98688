#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "sphere_cbo/random.hpp"
#include "sphere_cbo/sphere.hpp"

namespace sphere_cbo {

/// alpha value selecting the single best agent instead of a softmin average.
inline constexpr double kAlphaInfinity = std::numeric_limits<double>::infinity();

/// Softmin-weighted average of (a subset of) the agents.
struct ConsensusPoint {
  Vector point;                 ///< convex combination of unit vectors, |point| <= 1
  std::size_t best_index = 0;   ///< ensemble row of the lowest objective value
  double best_value = 0.0;
  std::vector<double> weights;  ///< normalized weights, aligned with the participating agents
};

/// Weights exp(-alpha (E_j - E_min)) normalized to sum to one. The minimum is
/// subtracted first, so the denominator is >= 1 for every finite alpha. With
/// alpha == kAlphaInfinity all weight goes to the best agent (lowest index on ties).
/// Throws InvalidObjectiveValue for non-finite values.
ConsensusPoint consensus_point(const Ensemble& e, std::span<const double> values, double alpha);

/// Batch variant: `values[k]` belongs to ensemble row `indices[k]`. The
/// stabilization is centered at the best agent of the batch.
ConsensusPoint consensus_point(const Ensemble& e, std::span<const std::size_t> indices,
                               std::span<const double> values, double alpha);

/// -(1/alpha) log((1/N) sum_j exp(-alpha E_j)), evaluated without overflow.
/// Tends to min_j E_j as alpha grows.
double laplace_functional(std::span<const double> values, double alpha);

enum class BatchMode { full, random_subset, disjoint_partition };

struct BatchPlan {
  BatchMode mode = BatchMode::full;
  std::size_t batch_size = 0;
  std::vector<std::vector<std::size_t>> indices;
};

/// M distinct indices out of [0, N), uniform over subsets (partial Fisher-Yates).
/// M >= N returns all indices in order without touching the stream.
std::vector<std::size_t> select_batch(std::size_t n, std::size_t m, Rng& rng);

/// Random partition of [0, N) into N/M disjoint batches of size M.
/// Throws InvalidParameter unless M divides N.
std::vector<std::vector<std::size_t>> partition_batches(std::size_t n, std::size_t m, Rng& rng);

/// Builds the per-iteration batch plan. Full consensus is used whenever the
/// active count does not exceed M. In partition mode a remainder that does
/// not fill a batch is merged into the last batch.
BatchPlan plan_batches(BatchMode mode, std::size_t active, std::size_t m, Rng& rng);

}  // namespace sphere_cbo
