#include "sphere_cbo/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sphere_cbo/errors.hpp"

namespace sphere_cbo {

namespace {

void check_values(std::span<const std::size_t> indices, std::span<const double> values) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) {
      throw InvalidObjectiveValue("objective value of agent " + std::to_string(indices.empty() ? k : indices[k]) +
                                  " is not finite");
    }
  }
}

}  // namespace

ConsensusPoint consensus_point(const Ensemble& e, std::span<const std::size_t> indices,
                               std::span<const double> values, double alpha) {
  if (values.empty()) throw InvalidInput("consensus_point: no agents");
  if (values.size() != indices.size()) throw InvalidInput("consensus_point: values and indices differ in length");
  if (std::isnan(alpha) || alpha < 0.0) throw InvalidParameter("alpha must be >= 0");
  check_values(indices, values);

  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] < values[best]) best = k;
  }

  ConsensusPoint out;
  out.best_index = indices[best];
  out.best_value = values[best];
  out.weights.assign(values.size(), 0.0);

  if (alpha == kAlphaInfinity) {
    out.weights[best] = 1.0;
    out.point = e.agent(indices[best]).transpose();
    return out;
  }

  double total = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    out.weights[k] = std::exp(-alpha * (values[k] - out.best_value));
    total += out.weights[k];
  }
  out.point = Vector::Zero(e.dim());
  for (std::size_t k = 0; k < values.size(); ++k) {
    out.weights[k] /= total;
    out.point.noalias() += out.weights[k] * e.agent(indices[k]).transpose();
  }
  return out;
}

ConsensusPoint consensus_point(const Ensemble& e, std::span<const double> values, double alpha) {
  if (values.size() != e.size()) throw InvalidInput("consensus_point: one value per agent required");
  std::vector<std::size_t> all(e.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return consensus_point(e, all, values, alpha);
}

double laplace_functional(std::span<const double> values, double alpha) {
  if (values.empty()) throw InvalidInput("laplace_functional: no values");
  if (!(alpha > 0.0)) throw InvalidParameter("laplace_functional needs alpha > 0");
  const double lo = *std::min_element(values.begin(), values.end());
  if (alpha == kAlphaInfinity) return lo;
  double sum = 0.0;
  for (double v : values) sum += std::exp(-alpha * (v - lo));
  return lo - std::log(sum / static_cast<double>(values.size())) / alpha;
}

std::vector<std::size_t> select_batch(std::size_t n, std::size_t m, Rng& rng) {
  if (m < 1) throw InvalidParameter("batch size must be >= 1");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (m >= n) return idx;
  for (std::size_t k = 0; k < m; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, n - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  idx.resize(m);
  return idx;
}

std::vector<std::vector<std::size_t>> partition_batches(std::size_t n, std::size_t m, Rng& rng) {
  if (m < 1 || n % m != 0) {
    throw InvalidParameter("partition_batches: batch size " + std::to_string(m) + " does not divide " +
                           std::to_string(n));
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t s = 0; s < n; s += m) batches.emplace_back(idx.begin() + s, idx.begin() + s + m);
  return batches;
}

BatchPlan plan_batches(BatchMode mode, std::size_t active, std::size_t m, Rng& rng) {
  BatchPlan plan;
  plan.batch_size = m;
  if (mode == BatchMode::full || m >= active) {
    plan.mode = BatchMode::full;
    plan.indices.push_back(select_batch(active, active, rng));
    return plan;
  }
  plan.mode = mode;
  if (mode == BatchMode::random_subset) {
    plan.indices.push_back(select_batch(active, m, rng));
    return plan;
  }
  const std::size_t whole = active - active % m;
  std::vector<std::size_t> idx(active);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  for (std::size_t s = 0; s < whole; s += m) plan.indices.emplace_back(idx.begin() + s, idx.begin() + s + m);
  plan.indices.back().insert(plan.indices.back().end(), idx.begin() + whole, idx.end());
  return plan;
}

}  // namespace sphere_cbo
