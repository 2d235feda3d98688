#include "sphere_cbo/gradient_kv.hpp"

#include <cmath>

#include "sphere_cbo/errors.hpp"

namespace sphere_cbo {

void validate(const GkvParams& gp) {
  if (gp.ell < 1) throw InvalidParameter("ell must be >= 1");
  if (!(gp.c_armijo > 0.0 && gp.c_armijo < 1.0)) throw InvalidParameter("Armijo constant must lie in (0, 1)");
  if (!(gp.tau_backtrack > 0.0 && gp.tau_backtrack < 1.0)) throw InvalidParameter("backtracking factor must lie in (0, 1)");
  if (!(gp.h0 > 0.0)) throw InvalidParameter("initial step h0 must be > 0");
  if (gp.max_backtracks < 1) throw InvalidParameter("max_backtracks must be >= 1");
  if (!(gp.h_fd > 0.0)) throw InvalidParameter("finite-difference step must be > 0");
}

Vector tangential_gradient(const Objective& obj, const Eigen::Ref<const Vector>& v, GradientSource source,
                           double h_fd, std::uint64_t* evaluations, const EvalKey& key) {
  Vector g;
  if (source == GradientSource::analytic) {
    if (!obj.has_gradient()) {
      throw UnsupportedObjective("objective '" + obj.name + "' has no analytic gradient");
    }
    g = obj.ambient_gradient(v);
  } else {
    g.resize(v.size());
    Vector probe = v;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      probe[k] = v[k] + h_fd;
      const double up = obj(probe, key);
      probe[k] = v[k] - h_fd;
      const double down = obj(probe, key);
      probe[k] = v[k];
      g[k] = (up - down) / (2.0 * h_fd);
    }
    if (evaluations) *evaluations += 2 * static_cast<std::uint64_t>(v.size());
  }
  return project_tangent_raw(v, g);
}

LineSearchResult armijo_linesearch(const Objective& obj, const Eigen::Ref<const Vector>& v,
                                   const Eigen::Ref<const Vector>& grad, const GkvParams& gp, const EvalKey& key) {
  LineSearchResult res;
  const double g2 = grad.squaredNorm();
  if (g2 == 0.0) return res;
  const double f0 = obj(v, key);
  res.evaluations = 1;
  double h = gp.h0;
  for (std::size_t k = 0; k < gp.max_backtracks; ++k, h *= gp.tau_backtrack) {
    const double trial = obj(Vector(v - h * grad), key);
    ++res.evaluations;
    if (trial <= f0 - gp.c_armijo * h * g2) {
      res.step = h;
      return res;
    }
  }
  return res;
}

InjectionResult gkv_inject(Ensemble& e, const Objective& obj, const GkvParams& gp, std::uint64_t iteration,
                           Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, e.size() - 1);
  InjectionResult res;
  res.agent = pick(rng);
  const EvalKey key{iteration, res.agent};
  const Vector v = e.agent(res.agent).transpose();
  const Vector grad = tangential_gradient(obj, v, gp.source, gp.h_fd, &res.evaluations, key);
  if (grad.squaredNorm() == 0.0) return res;
  const LineSearchResult ls = armijo_linesearch(obj, v, grad, gp, key);
  res.evaluations += ls.evaluations;
  res.step = ls.step;
  if (ls.step > 0.0) {
    e.mutable_agents().row(static_cast<Eigen::Index>(res.agent)) =
        renormalize(Vector(v - ls.step * grad)).coords().transpose();
  }
  return res;
}

}  // namespace sphere_cbo
