#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "support.hpp"
#include "sphere_cbo/errors.hpp"
#include "sphere_cbo/experiments.hpp"
#include "sphere_cbo/objectives.hpp"

using namespace sphere_cbo;

namespace {

const TestFunction kAll[] = {TestFunction::ackley, TestFunction::rastrigin, TestFunction::griewank,
                             TestFunction::salomon, TestFunction::alpine, TestFunction::xsy_random};

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto p = std::filesystem::temp_directory_path() / ("sphere_cbo_test_" + name);
  std::ofstream(p) << content;
  return p;
}

}  // namespace

TEST_CASE("every test function vanishes at its minimizer") {
  for (auto f : kAll) {
    for (int d = 2; d <= 50; ++d) {
      for (double angle : {0.0, std::numbers::pi / 8, std::numbers::pi / 2}) {
        const Objective obj = rotate_minimizer(f, d, angle);
        REQUIRE(obj.known_minimizer);
        CHECK(std::abs(obj(obj.known_minimizer->coords())) <= 1e-9);
      }
    }
  }
}

TEST_CASE("XSY vanishes at v* for every noise draw") {
  const UnitVector vs = north_pole(8);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Objective obj = xsy_random(8, vs, seed);
    for (std::uint64_t it = 0; it < 5; ++it) CHECK(obj.eval(vs.coords(), {it, seed}) == 0.0);
  }
}

TEST_CASE("XSY redraw is keyed, frozen is not") {
  Rng rng = derive_stream(11);
  const UnitVector v = sample_uniform(6, rng);
  const Objective redraw = xsy_random(6, north_pole(6), 5, XsyNoise::redraw);
  const Objective frozen = xsy_random(6, north_pole(6), 5, XsyNoise::frozen);
  CHECK(redraw.eval(v.coords(), {1, 2}) == redraw.eval(v.coords(), {1, 2}));
  CHECK(redraw.eval(v.coords(), {1, 2}) != redraw.eval(v.coords(), {1, 3}));
  CHECK(frozen.eval(v.coords(), {1, 2}) == frozen.eval(v.coords(), {7, 9}));
}

TEST_CASE("Griewank agrees with a second evaluator") {
  Rng rng = derive_stream(12);
  for (int d : {2, 3, 7}) {
    const UnitVector vs = rotated_minimizer(d, 0.3);
    const Objective g = griewank(d, vs);
    for (int i = 0; i < 5; ++i) {
      const UnitVector v = sample_uniform(d, rng);
      CHECK(g(v.coords()) == doctest::Approx(oracle::griewank(test::to_std(v.coords()), test::to_std(vs.coords())))
                                 .epsilon(1e-13));
    }
  }
  // d = 2 with V - v* = (t, 0), b t = pi: the cosine product is -1.
  const double t = std::numbers::pi / 600.0;
  Vector v(2);
  v << t, 1.0;
  CHECK(griewank(2, north_pole(2))(v) == doctest::Approx(std::pow(600.0 * t, 2) / 4000.0 + 2.0).epsilon(1e-14));
}

TEST_CASE("Ackley agrees with a second evaluator") {
  Rng rng = derive_stream(13);
  const UnitVector vs = rotated_minimizer(20, std::numbers::pi / 8);
  const Objective a = ackley(20, vs);
  for (int i = 0; i < 10; ++i) {
    const UnitVector v = sample_uniform(20, rng);
    CHECK(a(v.coords()) ==
          doctest::Approx(oracle::ackley(test::to_std(v.coords()), test::to_std(vs.coords()))).epsilon(1e-13));
  }
}

TEST_CASE("Alpine is continuous but kinked") {
  // Along V_1 = s near 0 the first term is b|s sin(bs) - a s| ~ a b |s|.
  const Objective al = alpine(3, north_pole(3));
  auto at = [&](double s) {
    Vector v(3);
    v << s, 0.0, 1.0;
    return al(v);
  };
  const double h = 1e-7;
  CHECK(std::abs(at(h) - at(0.0)) < 1e-5);
  const double left = (at(0.0) - at(-h)) / h, right = (at(h) - at(0.0)) / h;
  CHECK(right - left == doctest::Approx(2.0 * 0.1 * 10.0).epsilon(1e-3));
}

TEST_CASE("coordinate permutations fixing e_d leave symmetric functions invariant") {
  Rng rng = derive_stream(14);
  for (auto f : {TestFunction::rastrigin, TestFunction::ackley, TestFunction::salomon}) {
    const Objective obj = make_test_function(f, 6, north_pole(6));
    for (int i = 0; i < 20; ++i) {
      const Vector v = sample_uniform(6, rng).coords();
      Vector w = v;
      std::swap(w[0], w[3]);
      std::swap(w[1], w[4]);
      CHECK(obj(w) == doctest::Approx(obj(v)).epsilon(1e-13));
    }
  }
}

TEST_CASE("rotated minimizers") {
  CHECK(rotated_minimizer(5, 0.0).coords() == Vector::Unit(5, 4));
  const UnitVector r = rotated_minimizer(3, std::numbers::pi / 8);
  CHECK(r[0] == doctest::Approx(std::sin(std::numbers::pi / 8)));
  CHECK(r[1] == 0.0);
  CHECK(r[2] == doctest::Approx(std::cos(std::numbers::pi / 8)));
  CHECK(std::abs(r.coords().norm() - 1.0) <= 1e-15);
  CHECK((rotated_minimizer(2, std::numbers::pi / 2).coords() - Vector::Unit(2, 0)).norm() <= 1e-15);
  CHECK_THROWS_AS(rotate_minimizer(TestFunction::ackley, 3, 4.0), InvalidParameter);
}

TEST_CASE("parse_test_function") {
  CHECK(parse_test_function("alpine") == TestFunction::alpine);
  CHECK(parse_test_function("xsy") == TestFunction::xsy_random);
  CHECK_THROWS_AS(parse_test_function("sphere"), InvalidParameter);
}

TEST_CASE("pca_energy examples") {
  PointCloud c1;
  c1.points = {Vector::Unit(2, 0)};
  CHECK(pca_energy(c1, 2.0)(Vector::Unit(2, 0)) == 0.0);
  CHECK(pca_energy(c1, 2.0)(Vector::Unit(2, 1)) == 1.0);
  PointCloud c2;
  c2.points = {Vector::Constant(2, 1.0)};
  CHECK(pca_energy(c2, 1.0)(Vector::Unit(2, 0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(pca_energy(c1, 0.0), InvalidParameter);
  CHECK_THROWS_AS(pca_energy(c1, 2.5), InvalidParameter);
  CHECK(pca_energy(c1, 1.0).even);
}

TEST_CASE("pca_energy with p = 2 is a quadratic form") {
  Rng rng = derive_stream(15);
  const PointCloud cloud = haystack(6, 30, 10, rng);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(6, 6);
  double total = 0.0;
  for (const auto& x : cloud.points) {
    S += x * x.transpose();
    total += x.squaredNorm();
  }
  const Objective e2 = pca_energy(cloud, 2.0);
  for (int i = 0; i < 50; ++i) {
    const Vector v = sample_uniform(6, rng).coords();
    CHECK(std::abs(e2(v) - (total - v.dot(S * v))) <= 1e-9);
  }
}

TEST_CASE("haystack statistics") {
  Rng rng = derive_stream(16);
  SUBCASE("rank-one cloud recovers its direction") {
    const PointCloud c = haystack(30, 100, 0, rng);
    REQUIRE(c.inlier_direction);
    CHECK(std::abs(power_iteration_top_direction(c).coords().dot(c.inlier_direction->coords())) >= 0.99);
  }
  SUBCASE("matched second moments and tangential spread") {
    const int d = 30, n = 10000;
    const PointCloud in = haystack(d, n, 0, rng);
    const PointCloud out = haystack(d, 1, n, rng);
    double m_in = 0.0, m_out = 0.0, tang = 0.0;
    const Vector w = in.inlier_direction->coords();
    for (const auto& x : in.points) {
      m_in += x.squaredNorm();
      tang += x.squaredNorm() - std::pow(x.dot(w), 2);
    }
    for (std::size_t i = 1; i < out.points.size(); ++i) m_out += out.points[i].squaredNorm();
    // points are raw draws (no centering), so the covariance traces apply directly
    CHECK(m_in / n == doctest::Approx(1.0 + 1e-4 * d).epsilon(0.05));
    CHECK(m_out / n == doctest::Approx(1.0).epsilon(0.05));
    CHECK(tang / n == doctest::Approx(1e-4 * (d - 1)).epsilon(0.10));
  }
  SUBCASE("clean inliers lie on the inlier line") {
    const PointCloud c = haystack(5, 20, 5, rng);
    CHECK(c.clean_inliers.size() == 20);
    const Vector w = c.inlier_direction->coords();
    for (const auto& x : c.clean_inliers) CHECK((x - x.dot(w) * w).norm() <= 1e-14 * (1.0 + x.norm()));
  }
}

TEST_CASE("gaussian frames and the phase-retrieval risk") {
  Rng rng = derive_stream(17);
  SUBCASE("measurements") {
    const Frame f = gaussian_frame(4, 10000, UnitVector::basis(4, 0), rng);
    double mean = 0.0;
    for (Eigen::Index i = 0; i < f.vectors.rows(); ++i) {
      CHECK(f.measurements[i] >= 0.0);
      CHECK(f.measurements[i] == doctest::Approx(f.vectors(i, 0) * f.vectors(i, 0)).epsilon(1e-12));
      mean += f.measurements[i];
    }
    CHECK(mean / 10000 == doctest::Approx(1.0).epsilon(0.05));
  }
  SUBCASE("even with zeros at the truth") {
    const UnitVector t = sample_uniform(5, rng);
    const Objective r = phase_retrieval_risk(gaussian_frame(5, 12, t, rng));
    CHECK(r.even);
    CHECK(std::abs(r(t.coords())) <= 1e-24);
    CHECK(std::abs(r((-t).coords())) <= 1e-24);
    for (int i = 0; i < 20; ++i) {
      const Vector v = sample_uniform(5, rng).coords();
      CHECK(std::abs(r(v) - r(-v)) <= 1e-12);
    }
  }
  SUBCASE("single frame vector") {
    Frame f{Eigen::MatrixXd::Identity(1, 2), Vector::Ones(1), UnitVector::basis(2, 0)};
    CHECK(phase_retrieval_risk(f)(Vector::Unit(2, 1)) == 1.0);
  }
  SUBCASE("matches a second evaluator") {
    const UnitVector t = sample_uniform(3, rng);
    const Frame f = gaussian_frame(3, 5, t, rng);
    std::vector<oracle::Vec> a;
    for (Eigen::Index i = 0; i < 5; ++i) a.push_back(test::to_std(f.vectors.row(i).transpose()));
    const oracle::Vec y = test::to_std(f.measurements);
    const Objective r = phase_retrieval_risk(f);
    for (int i = 0; i < 10; ++i) {
      const Vector v = sample_uniform(3, rng).coords();
      CHECK(std::abs(r(v) - oracle::phase_risk(a, y, test::to_std(v))) <= 1e-12);
    }
  }
}

TEST_CASE("load_pointcloud_csv") {
  SUBCASE("centering") {
    const auto p = temp_file("tri.csv", "1,0\n0,1\n-1,-1\n");
    const PointCloud c = load_pointcloud_csv(p);
    REQUIRE(c.points.size() == 3);
    Vector s = Vector::Zero(2);
    for (const auto& x : c.points) s += x;
    CHECK(s.norm() <= 1e-15);
  }
  SUBCASE("single row centers to zero") {
    const PointCloud c = load_pointcloud_csv(temp_file("one.csv", "2.5, -1, 3\n"));
    CHECK(c.points.front().norm() == 0.0);
  }
  SUBCASE("ragged rows name the row") {
    try {
      load_pointcloud_csv(temp_file("ragged.csv", "1,2\n3,4\n5\n"));
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
  }
  SUBCASE("non-numeric cells name row and column") {
    try {
      load_pointcloud_csv(temp_file("text.csv", "1,2\n3,x\n"));
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("row 2, column 2") != std::string::npos);
    }
  }
  SUBCASE("empty file") { CHECK_THROWS_AS(load_pointcloud_csv(temp_file("empty.csv", "")), ParseError); }
}
