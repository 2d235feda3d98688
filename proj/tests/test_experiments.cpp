#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "sphere_cbo/errors.hpp"
#include "sphere_cbo/experiments.hpp"

using namespace sphere_cbo;

TEST_CASE("power iteration on small clouds") {
  const std::vector<Vector> pts{Vector::Unit(3, 0), Vector::Unit(3, 0), Vector::Unit(3, 1)};
  CHECK((power_iteration_top_direction(pts).coords() - Vector::Unit(3, 0)).norm() <= 1e-9);

  Rng rng = derive_stream(71);
  const UnitVector w = sample_uniform(6, rng);
  std::vector<Vector> line;
  for (double c : {-2.0, 0.5, 3.0}) line.push_back(c * w.coords());
  CHECK(std::abs(std::abs(power_iteration_top_direction(line, 2).coords().dot(w.coords())) - 1.0) <= 1e-12);
  CHECK_THROWS_AS(power_iteration_top_direction(std::vector<Vector>{}), InvalidInput);
}

TEST_CASE("power iteration agrees with a Jacobi eigensolver") {
  Rng rng = derive_stream(72);
  for (int trial = 0; trial < 10; ++trial) {
    const PointCloud c = haystack(8, 40, 20, rng);
    std::vector<oracle::Vec> pts;
    for (const auto& x : c.points) pts.push_back(test::to_std(x));
    const Vector ref = test::to_eigen(oracle::top_eigenvector_jacobi(pts));
    const Vector got = power_iteration_top_direction(c, 5000, 1e-10).coords();
    CHECK(sign_folded_distance(got, ref) <= 1e-6);
    Eigen::Index k = 0;
    got.cwiseAbs().maxCoeff(&k);
    CHECK(got[k] > 0.0);
  }
}

TEST_CASE("power iteration reports non-convergence") {
  // Two equal eigenvalues: the residual never certifies a single direction
  // only if the iteration budget is tiny, so use one iteration on a cloud
  // with a slow spectral gap.
  std::vector<Vector> pts;
  for (int i = 0; i < 5; ++i) {
    Vector x = Vector::Zero(5);
    x[i] = 1.0 + 1e-3 * i;
    pts.push_back(x);
  }
  CHECK_THROWS_AS(power_iteration_top_direction(pts, 1, 1e-12), ConvergenceFailure);
}

TEST_CASE("haystack oracle on near rank-one data") {
  Rng rng = derive_stream(73);
  const PointCloud c = haystack(30, 200, 0, rng);
  CHECK(std::abs(power_iteration_top_direction(c).coords().dot(c.inlier_direction->coords())) >= 0.99);
}

TEST_CASE("sign-folded distance is symmetric") {
  Rng rng = derive_stream(74);
  for (int i = 0; i < 50; ++i) {
    const Vector u = sample_uniform(5, rng).coords(), v = sample_uniform(5, rng).coords();
    CHECK(sign_folded_distance(v, u) == sign_folded_distance(-v, u));
    CHECK(sign_folded_distance(v, u) <= std::sqrt(2.0) + 1e-15);
  }
}

TEST_CASE("Wilson interval") {
  const Interval i = wilson_interval(0, 20);
  CHECK(i.low == 0.0);
  CHECK(i.high == doctest::Approx(0.16112).epsilon(1e-4));
  const Interval j = wilson_interval(10, 20);
  CHECK((j.low + j.high) / 2 == doctest::Approx(0.5));
  CHECK(j.low == doctest::Approx(0.29929).epsilon(1e-4));
}

TEST_CASE("sweeps are reproducible and scheduling-independent") {
  ExperimentSpec spec;
  spec.runs = 4;
  spec.seed = 9;
  SweepCase c;
  c.function = TestFunction::xsy_random;
  c.dim = 6;
  c.params.n_agents = 30;
  c.params.batch_size = 18;
  c.params.max_iter = 200;
  c.params.n_stall = 40;
  spec.cases = {c};
  const SuccessTable a = benchmark_sweep(spec);
  spec.threads = 3;
  const SuccessTable b = benchmark_sweep(spec);
  REQUIRE(a.size() == 1);
  CHECK(a[0].records.size() == 4);
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(a[0].records[r].error == b[0].records[r].error);
    CHECK(a[0].records[r].iterations == b[0].records[r].iterations);
  }
  CHECK(a[0].success_rate >= 0.0);
  CHECK(a[0].success_rate <= 1.0);
  if (a[0].successes == 0) CHECK_FALSE(a[0].mean_error);
}

TEST_CASE("phase retrieval with a single measurement cannot identify the signal") {
  PhaseRetrievalSpec spec;
  spec.dim = 10;
  spec.frame_sizes = {1};
  spec.runs = 10;
  spec.params.n_agents = 100;
  spec.params.batch_size = 50;
  spec.params.sigma = 1.0;
  spec.params.dt = 0.5;
  spec.params.alpha = 1e4;
  spec.params.max_iter = 300;
  const auto rows = phase_retrieval_curve(spec);
  CHECK(rows.front().success_rate <= 0.1);
}

TEST_CASE("robust PCA without outliers recovers the SVD direction") {
  RobustPcaSpec spec;
  spec.dim = 10;
  spec.points = 100;
  spec.outlier_fractions = {0.0};
  spec.p = 2.0;
  spec.params.n_agents = 200;
  spec.params.batch_size = 100;
  spec.params.sigma = 1.0;
  spec.params.dt = 0.5;
  spec.params.max_iter = 1500;
  spec.runs = 4;
  const auto rows = robust_pca_experiment(spec);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].outliers == 0);
  CHECK(rows[0].max_error <= 1e-2);
}

TEST_CASE("property suite passes") {
  for (const auto& r : property_suite(5, 50)) {
    INFO(r.name << " worst " << r.worst);
    CHECK(r.passed());
    CHECK(r.trials >= 50);
  }
}

TEST_CASE("isotropic Salomon never stalls") {
  ExperimentSpec spec;
  spec.runs = 3;
  spec.seed = 2;
  SweepCase c;
  c.function = TestFunction::salomon;
  c.dim = 20;
  c.params.noise = NoiseMode::isotropic;
  c.params.sigma = 0.3;
  c.params.dt = 0.05;
  c.params.n_agents = 50;
  c.params.batch_size = 30;
  spec.cases = {c};
  const SuccessRow row = benchmark_sweep(spec).front();
  CHECK(row.n_avg_iterations == 20000.0);
  CHECK(row.stalled_runs == 0);
}
