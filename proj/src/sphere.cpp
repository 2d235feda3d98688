#include "sphere_cbo/sphere.hpp"

#include <cmath>
#include <string>

#include "sphere_cbo/errors.hpp"

namespace sphere_cbo {

namespace {

void require_dim(Eigen::Index d) {
  if (d < 2) throw InvalidDimension("sphere dimension d must be >= 2, got " + std::to_string(d));
}

// Uniform direction in the tangent space at mu.
Vector tangent_direction(const Vector& mu, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    Vector z(mu.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = normal(rng);
    z -= mu.dot(z) * mu;
    const double n = z.norm();
    if (n > kDegenerateNorm) return z / n;
  }
}

double sample_beta(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

}  // namespace

UnitVector::UnitVector(const Vector& v) {
  require_dim(v.size());
  const double n = v.norm();
  if (!(n >= kDegenerateNorm)) {
    throw DegenerateVector("cannot normalize vector of norm " + std::to_string(n));
  }
  coords_ = v / n;
}

UnitVector UnitVector::basis(Eigen::Index d, Eigen::Index k) {
  require_dim(d);
  if (k < 0 || k >= d) throw InvalidInput("basis index out of range");
  Vector e = Vector::Zero(d);
  e[k] = 1.0;
  return UnitVector(std::move(e), Trusted{});
}

UnitVector UnitVector::operator-() const { return UnitVector(Vector(-coords_), Trusted{}); }

UnitVector renormalize(const Vector& v) {
  require_dim(v.size());
  const double n = v.norm();
  if (!(n >= kDegenerateNorm)) {
    throw DegenerateVector("cannot renormalize vector of norm " + std::to_string(n));
  }
  return UnitVector(Vector(v / n), UnitVector::Trusted{});
}

Ensemble::Ensemble(AgentMatrix agents) : agents_(std::move(agents)) {
  if (agents_.rows() < 1) throw InvalidInput("ensemble needs at least one agent");
  require_dim(agents_.cols());
  for (Eigen::Index i = 0; i < agents_.rows(); ++i) {
    if (std::abs(agents_.row(i).norm() - 1.0) > 1e-12) {
      throw InvalidInput("agent " + std::to_string(i) + " is not a unit vector");
    }
  }
}

Ensemble::Ensemble(std::span<const UnitVector> agents) {
  if (agents.empty()) throw InvalidInput("ensemble needs at least one agent");
  const Eigen::Index d = agents.front().dim();
  agents_.resize(static_cast<Eigen::Index>(agents.size()), d);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (agents[i].dim() != d) throw InvalidInput("agents have mixed dimensions");
    agents_.row(static_cast<Eigen::Index>(i)) = agents[i].coords().transpose();
  }
}

void Ensemble::keep_rows(std::span<const std::size_t> rows) {
  if (rows.empty()) throw InvalidInput("ensemble needs at least one agent");
  AgentMatrix kept(static_cast<Eigen::Index>(rows.size()), agents_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    kept.row(static_cast<Eigen::Index>(i)) = agents_.row(static_cast<Eigen::Index>(rows[i]));
  }
  agents_ = std::move(kept);
}

UnitVector sample_uniform(Eigen::Index d, Rng& rng) {
  require_dim(d);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    Vector z(d);
    for (Eigen::Index k = 0; k < d; ++k) z[k] = normal(rng);
    if (z.norm() >= kDegenerateNorm) return renormalize(z);
  }
}

UnitVector sample_vmf(const Vector& mu, double kappa, Rng& rng) {
  require_dim(mu.size());
  if (std::abs(mu.norm() - 1.0) > 1e-12) throw InvalidInput("vMF mean direction must be a unit vector");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InvalidParameter("vMF concentration must be finite and >= 0");

  const double m = static_cast<double>(mu.size() - 1);
  // b written in the cancellation-free form
  const double b = m / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + m * m));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + m * std::log(1.0 - x0 * x0);

  double w = 0.0;
  for (;;) {
    const double z = sample_beta(m / 2.0, m / 2.0, rng);
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = uniform01(rng);
    if (kappa * w + m * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
  }
  const Vector xi = tangent_direction(mu, rng);
  return renormalize(Vector(w * mu + std::sqrt(std::max(0.0, 1.0 - w * w)) * xi));
}

Vector project_tangent(const UnitVector& v, const Vector& y) {
  if (v.dim() != y.size()) throw InvalidInput("project_tangent: dimension mismatch");
  return y - v.coords().dot(y) * v.coords();
}

Vector project_tangent_raw(const Eigen::Ref<const Vector>& v, const Eigen::Ref<const Vector>& y) {
  return y - v.dot(y) * v;
}

EnsembleStats ensemble_stats(const Ensemble& e) {
  if (e.size() == 0) throw InvalidInput("ensemble_stats: empty ensemble");
  const auto& a = e.agents();
  const double n = static_cast<double>(a.rows());
  Vector mean = a.colwise().sum().transpose() / n;
  double sigma = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) sigma += (a.row(i).transpose() - mean).squaredNorm();
  sigma /= n;
  const double half = 0.5 * (1.0 - mean.squaredNorm());
  return EnsembleStats{std::move(mean), sigma, half};
}

Ensemble sample_uniform_ensemble(std::size_t n, Eigen::Index d, Rng& rng) {
  std::vector<UnitVector> agents;
  agents.reserve(n);
  for (std::size_t i = 0; i < n; ++i) agents.push_back(sample_uniform(d, rng));
  return Ensemble(std::span<const UnitVector>(agents));
}

Ensemble sample_vmf_ensemble(std::size_t n, const Vector& mu, double kappa, Rng& rng) {
  std::vector<UnitVector> agents;
  agents.reserve(n);
  for (std::size_t i = 0; i < n; ++i) agents.push_back(sample_vmf(mu, kappa, rng));
  return Ensemble(std::span<const UnitVector>(agents));
}

}  // namespace sphere_cbo
