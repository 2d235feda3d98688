#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "sphere_cbo/random.hpp"

namespace sphere_cbo {

using Vector = Eigen::VectorXd;
using AgentMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Smallest norm accepted by renormalize().
inline constexpr double kDegenerateNorm = 1e-14;

/// A point of S^{d-1} embedded in R^d, d >= 2.
class UnitVector {
 public:
  /// Normalizes `v`. Throws DegenerateVector if |v| < kDegenerateNorm and
  /// InvalidDimension if v has fewer than two coordinates.
  explicit UnitVector(const Vector& v);

  /// Cardinal direction e_k (0-based k) in R^d.
  static UnitVector basis(Eigen::Index d, Eigen::Index k);

  const Vector& coords() const { return coords_; }
  Eigen::Index dim() const { return coords_.size(); }
  double operator[](Eigen::Index k) const { return coords_[k]; }
  operator const Vector&() const { return coords_; }

  UnitVector operator-() const;

 private:
  struct Trusted {};
  UnitVector(Vector v, Trusted) : coords_(std::move(v)) {}
  friend UnitVector renormalize(const Vector& v);
  Vector coords_;
};

/// N active agents stored one per row. Every row has unit norm.
class Ensemble {
 public:
  Ensemble() = default;
  /// Rows must have unit norm to 1e-12; throws InvalidInput otherwise.
  explicit Ensemble(AgentMatrix agents);
  explicit Ensemble(std::span<const UnitVector> agents);

  std::size_t size() const { return static_cast<std::size_t>(agents_.rows()); }
  Eigen::Index dim() const { return agents_.cols(); }

  const AgentMatrix& agents() const { return agents_; }
  /// Row access for the steppers. Callers must restore unit norm.
  AgentMatrix& mutable_agents() { return agents_; }

  auto agent(std::size_t i) const { return agents_.row(static_cast<Eigen::Index>(i)); }

  /// Keeps only the listed rows, in the listed order.
  void keep_rows(std::span<const std::size_t> rows);

 private:
  AgentMatrix agents_;
};

struct EnsembleStats {
  Vector mean;                ///< unnormalized barycenter E
  double empirical_variance;  ///< Sigma = (1/N) sum |V_j - E|^2, used for discarding
  double half_variance;       ///< V = (1 - |E|^2) / 2, the theory-side variance
};

/// Uniform sample on S^{d-1} (normalized Gaussian vector).
UnitVector sample_uniform(Eigen::Index d, Rng& rng);

/// von Mises-Fisher sample with mean direction `mu` and concentration `kappa`
/// (Wood's rejection sampler for the component along mu).
UnitVector sample_vmf(const Vector& mu, double kappa, Rng& rng);

/// P(v) y = y - <v, y> v.
Vector project_tangent(const UnitVector& v, const Vector& y);

/// Same projection for a raw row that is known to have unit norm.
Vector project_tangent_raw(const Eigen::Ref<const Vector>& v, const Eigen::Ref<const Vector>& y);

/// v / |v|; throws DegenerateVector when |v| < kDegenerateNorm.
UnitVector renormalize(const Vector& v);

EnsembleStats ensemble_stats(const Ensemble& e);

Ensemble sample_uniform_ensemble(std::size_t n, Eigen::Index d, Rng& rng);
Ensemble sample_vmf_ensemble(std::size_t n, const Vector& mu, double kappa, Rng& rng);

}  // namespace sphere_cbo
