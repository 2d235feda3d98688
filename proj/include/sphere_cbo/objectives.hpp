#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sphere_cbo/random.hpp"
#include "sphere_cbo/sphere.hpp"

namespace sphere_cbo {

/// Identifies one objective call inside a run. Deterministic objectives ignore
/// it; stochastic ones derive their noise from it so that concurrent
/// evaluation stays reproducible.
struct EvalKey {
  std::uint64_t iteration = 0;
  std::uint64_t agent = 0;
};

using EvalFn = std::function<double(const Eigen::Ref<const Vector>&, const EvalKey&)>;
using GradientFn = std::function<Vector(const Eigen::Ref<const Vector>&)>;

/// Black-box objective E : S^{d-1} -> R. Captured data must be read-only so
/// that one Objective can be evaluated from several threads.
struct Objective {
  std::string name;
  Eigen::Index dim = 0;
  EvalFn eval;
  std::optional<UnitVector> known_minimizer;
  GradientFn ambient_gradient;  ///< empty when no analytic gradient exists
  bool even = false;            ///< E(v) == E(-v); success metrics fold the sign

  double operator()(const Eigen::Ref<const Vector>& v, const EvalKey& key = {}) const {
    return eval(v, key);
  }
  bool has_gradient() const { return static_cast<bool>(ambient_gradient); }
};

enum class TestFunction { ackley, rastrigin, griewank, salomon, alpine, xsy_random };

std::string_view to_string(TestFunction f);
/// Accepts the lower-case names used by to_string ("xsy" is an alias of xsy_random).
TestFunction parse_test_function(std::string_view name);

enum class XsyNoise {
  redraw,  ///< fresh xi_k on every call, keyed by (seed, iteration, agent)
  frozen,  ///< one xi draw per objective, fixed for its lifetime
};

struct TestFunctionOptions {
  std::uint64_t seed = 0;  ///< only used by xsy_random
  XsyNoise xsy_noise = XsyNoise::redraw;
};

/// e_d = (0, ..., 0, 1), the default minimizer location.
UnitVector north_pole(Eigen::Index d);

/// e_d rotated by `angle` inside the (e_1, e_d) plane.
UnitVector rotated_minimizer(Eigen::Index d, double angle);

Objective make_test_function(TestFunction f, Eigen::Index d, const UnitVector& minimizer,
                             const TestFunctionOptions& opts = {});

Objective ackley(Eigen::Index d, const UnitVector& minimizer);
Objective rastrigin(Eigen::Index d, const UnitVector& minimizer);
Objective griewank(Eigen::Index d, const UnitVector& minimizer);
Objective salomon(Eigen::Index d, const UnitVector& minimizer);
Objective alpine(Eigen::Index d, const UnitVector& minimizer);
Objective xsy_random(Eigen::Index d, const UnitVector& minimizer, std::uint64_t seed,
                     XsyNoise noise = XsyNoise::redraw);

/// Test function whose minimizer is e_d rotated by `angle` in [0, pi].
Objective rotate_minimizer(TestFunction f, Eigen::Index d, double angle,
                           const TestFunctionOptions& opts = {});

struct PointCloud {
  std::vector<Vector> points;
  std::optional<UnitVector> inlier_direction;
  /// Noise-free rank-one inlier samples g*w (synthetic clouds only).
  std::vector<Vector> clean_inliers;

  Eigen::Index dim() const { return points.empty() ? 0 : points.front().size(); }
};

/// Robust PCA energy E_p(v) = sum_i (|x_i|^2 - <x_i, v>^2)^{p/2}, 0 < p <= 2.
///
/// Off the sphere the energy is evaluated at v/|v|, so it is constant along
/// rays; on the sphere this is exactly the formula above. The ambient gradient
/// is -p (|x|^2 - <x,v>^2)^{p/2-1} <x,v> x summed over the points, with terms
/// whose residual is below 1e-12 contributing zero.
Objective pca_energy(const PointCloud& cloud, double p);

/// Haystack model: P_in inliers g*w + 1e-2*z (covariance w w^T + 1e-4 I) and
/// P_out outliers N(0, I/d). w is drawn uniformly on the sphere.
PointCloud haystack(Eigen::Index d, std::size_t inliers, std::size_t outliers, Rng& rng);

/// Noiseless real phase-retrieval instance y_i = <v*, a_i>^2, a_i ~ N(0, I_d).
struct Frame {
  Eigen::MatrixXd vectors;  ///< one a_i per row
  Vector measurements;
  UnitVector truth;
};

Frame gaussian_frame(Eigen::Index d, std::size_t frame_size, const UnitVector& truth, Rng& rng);

/// E(v) = (1/M) sum_i (<v, a_i>^2 - y_i)^2. Even in v.
Objective phase_retrieval_risk(const Frame& frame);

/// Reads a headerless numeric CSV, one point per row, and centers it.
PointCloud load_pointcloud_csv(const std::filesystem::path& path);

}  // namespace sphere_cbo
