#pragma once

#include <cstddef>
#include <cstdint>

#include "sphere_cbo/objectives.hpp"
#include "sphere_cbo/random.hpp"
#include "sphere_cbo/sphere.hpp"

namespace sphere_cbo {

enum class GradientSource { analytic, finite_difference };

/// Knobs of the gradient-injection variant. Defaults: one injection every 10
/// iterations, Armijo constant 1e-4, halving from h = 1.
struct GkvParams {
  std::size_t ell = 10;
  double c_armijo = 1e-4;
  double tau_backtrack = 0.5;
  double h0 = 1.0;
  std::size_t max_backtracks = 40;  ///< trial steps h0, h0*tau, ..., h0*tau^(max_backtracks-1)
  GradientSource source = GradientSource::analytic;
  double h_fd = 1e-6;

  bool operator==(const GkvParams&) const = default;
};

void validate(const GkvParams& gp);

/// P(v) grad E(v). In finite-difference mode the ambient gradient is
/// approximated by central differences of step h_fd (2d evaluations).
/// `evaluations`, when given, is incremented by the number of objective calls.
Vector tangential_gradient(const Objective& obj, const Eigen::Ref<const Vector>& v, GradientSource source,
                           double h_fd = 1e-6, std::uint64_t* evaluations = nullptr,
                           const EvalKey& key = {});

struct LineSearchResult {
  double step = 0.0;  ///< 0 means no trial step satisfied the Armijo condition
  std::uint64_t evaluations = 0;
};

/// Backtracking on E(v - h g) <= E(v) - c h |g|^2, evaluated at the ambient
/// (not renormalized) point.
LineSearchResult armijo_linesearch(const Objective& obj, const Eigen::Ref<const Vector>& v,
                                   const Eigen::Ref<const Vector>& grad, const GkvParams& gp,
                                   const EvalKey& key = {});

struct InjectionResult {
  std::size_t agent = 0;
  double step = 0.0;
  std::uint64_t evaluations = 0;
};

/// Replaces one uniformly chosen agent by renormalize(V - h grad_S E(V)).
InjectionResult gkv_inject(Ensemble& e, const Objective& obj, const GkvParams& gp, std::uint64_t iteration,
                           Rng& rng);

}  // namespace sphere_cbo
