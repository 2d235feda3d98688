#include "sphere_cbo/objectives.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

#include "sphere_cbo/errors.hpp"

namespace sphere_cbo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_minimizer(Eigen::Index d, const UnitVector& m) {
  if (d < 2) throw InvalidDimension("test functions need d >= 2");
  if (m.dim() != d) throw InvalidInput("minimizer dimension does not match d");
}

Objective make(std::string name, Eigen::Index d, const UnitVector& minimizer, EvalFn fn) {
  Objective obj;
  obj.name = std::move(name);
  obj.dim = d;
  obj.eval = std::move(fn);
  obj.known_minimizer = minimizer;
  return obj;
}

}  // namespace

std::string_view to_string(TestFunction f) {
  switch (f) {
    case TestFunction::ackley: return "ackley";
    case TestFunction::rastrigin: return "rastrigin";
    case TestFunction::griewank: return "griewank";
    case TestFunction::salomon: return "salomon";
    case TestFunction::alpine: return "alpine";
    case TestFunction::xsy_random: return "xsy_random";
  }
  return "unknown";
}

TestFunction parse_test_function(std::string_view name) {
  if (name == "ackley") return TestFunction::ackley;
  if (name == "rastrigin") return TestFunction::rastrigin;
  if (name == "griewank") return TestFunction::griewank;
  if (name == "salomon") return TestFunction::salomon;
  if (name == "alpine") return TestFunction::alpine;
  if (name == "xsy_random" || name == "xsy") return TestFunction::xsy_random;
  throw InvalidParameter("unknown test function '" + std::string(name) + "'");
}

UnitVector north_pole(Eigen::Index d) { return UnitVector::basis(d, d - 1); }

UnitVector rotated_minimizer(Eigen::Index d, double angle) {
  if (d < 2) throw InvalidDimension("rotated_minimizer needs d >= 2");
  Vector v = Vector::Zero(d);
  v[0] = std::sin(angle);
  v[d - 1] = std::cos(angle);
  return renormalize(v);
}

Objective ackley(Eigen::Index d, const UnitVector& minimizer) {
  check_minimizer(d, minimizer);
  static constexpr double A = 20.0, a = 0.2, b = 32.0, B = 20.0;
  const Vector vs = minimizer.coords();
  const double dd = static_cast<double>(d);
  return make("ackley", d, minimizer, [vs, dd](const Eigen::Ref<const Vector>& v, const EvalKey&) {
    const Vector diff = v - vs;
    const double cos_mean = (kTwoPi * b * diff.array()).cos().sum() / dd;
    return -A * std::exp(-a * b / std::sqrt(dd) * diff.norm()) - std::exp(cos_mean) + std::numbers::e + B;
  });
}

Objective rastrigin(Eigen::Index d, const UnitVector& minimizer) {
  check_minimizer(d, minimizer);
  static constexpr double A = 10.0, b = 5.12, B = 10.0;
  const Vector vs = minimizer.coords();
  const double dd = static_cast<double>(d);
  return make("rastrigin", d, minimizer, [vs, dd](const Eigen::Ref<const Vector>& v, const EvalKey&) {
    const Vector diff = v - vs;
    return b * b / dd * diff.squaredNorm() - A / dd * (kTwoPi * b * diff.array()).cos().sum() + B;
  });
}

Objective griewank(Eigen::Index d, const UnitVector& minimizer) {
  check_minimizer(d, minimizer);
  static constexpr double A = 1.0 / 4000.0, b = 600.0, B = 1.0;
  const Vector vs = minimizer.coords();
  // 1/sqrt(k) for k = 1..d
  const Vector inv_sqrt_k = Vector::LinSpaced(d, 1.0, static_cast<double>(d)).array().rsqrt();
  return make("griewank", d, minimizer, [vs, inv_sqrt_k](const Eigen::Ref<const Vector>& v, const EvalKey&) {
    const Vector diff = v - vs;
    const double prod = (b * diff.array() * inv_sqrt_k.array()).cos().prod();
    return A * b * b * diff.squaredNorm() - prod + B;
  });
}

Objective salomon(Eigen::Index d, const UnitVector& minimizer) {
  check_minimizer(d, minimizer);
  static constexpr double a = 0.1, b = 100.0, A = -1.0, B = 1.0;
  const Vector vs = minimizer.coords();
  return make("salomon", d, minimizer, [vs](const Eigen::Ref<const Vector>& v, const EvalKey&) {
    const double r = (v - vs).norm();
    return A * std::cos(kTwoPi * b * r) + a * b * r + B;
  });
}

Objective alpine(Eigen::Index d, const UnitVector& minimizer) {
  check_minimizer(d, minimizer);
  static constexpr double a = 0.1, b = 10.0;
  const Vector vs = minimizer.coords();
  return make("alpine", d, minimizer, [vs](const Eigen::Ref<const Vector>& v, const EvalKey&) {
    const Eigen::ArrayXd diff = (v - vs).array();
    return b * (diff * (b * diff).sin() - a * diff).abs().sum();
  });
}

Objective xsy_random(Eigen::Index d, const UnitVector& minimizer, std::uint64_t seed, XsyNoise noise) {
  check_minimizer(d, minimizer);
  static constexpr double b = 5.0;
  const Vector vs = minimizer.coords();
  const Eigen::ArrayXd powers = Eigen::ArrayXd::LinSpaced(d, 1.0, static_cast<double>(d));

  auto terms = [vs, powers](const Eigen::Ref<const Vector>& v) -> Eigen::ArrayXd {
    return (b * (v - vs).array()).abs().pow(powers);
  };
  auto draw = [d](Rng rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::ArrayXd xi(d);
    for (Eigen::Index k = 0; k < d; ++k) xi[k] = u(rng);
    return xi;
  };

  if (noise == XsyNoise::frozen) {
    const Eigen::ArrayXd xi = draw(derive_stream(seed, {0x5859ULL}));
    return make("xsy_random", d, minimizer, [terms, xi](const Eigen::Ref<const Vector>& v, const EvalKey&) {
      return (xi * terms(v)).sum();
    });
  }
  return make("xsy_random", d, minimizer,
              [terms, draw, seed](const Eigen::Ref<const Vector>& v, const EvalKey& key) {
                return (draw(derive_stream(seed, {key.iteration, key.agent})) * terms(v)).sum();
              });
}

Objective make_test_function(TestFunction f, Eigen::Index d, const UnitVector& minimizer,
                             const TestFunctionOptions& opts) {
  switch (f) {
    case TestFunction::ackley: return ackley(d, minimizer);
    case TestFunction::rastrigin: return rastrigin(d, minimizer);
    case TestFunction::griewank: return griewank(d, minimizer);
    case TestFunction::salomon: return salomon(d, minimizer);
    case TestFunction::alpine: return alpine(d, minimizer);
    case TestFunction::xsy_random: return xsy_random(d, minimizer, opts.seed, opts.xsy_noise);
  }
  throw InvalidParameter("unknown test function");
}

Objective rotate_minimizer(TestFunction f, Eigen::Index d, double angle, const TestFunctionOptions& opts) {
  if (!(angle >= 0.0 && angle <= std::numbers::pi)) throw InvalidParameter("rotation angle must lie in [0, pi]");
  return make_test_function(f, d, rotated_minimizer(d, angle), opts);
}

Objective pca_energy(const PointCloud& cloud, double p) {
  if (!(p > 0.0 && p <= 2.0)) throw InvalidParameter("pca_energy: p must satisfy 0 < p <= 2");
  if (cloud.points.empty()) throw InvalidInput("pca_energy: empty point cloud");
  const Eigen::Index d = cloud.dim();
  auto X = std::make_shared<Eigen::MatrixXd>(static_cast<Eigen::Index>(cloud.points.size()), d);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (cloud.points[i].size() != d) throw InvalidInput("pca_energy: points have mixed dimensions");
    X->row(static_cast<Eigen::Index>(i)) = cloud.points[i].transpose();
  }
  auto sq_norms = std::make_shared<Eigen::ArrayXd>(X->rowwise().squaredNorm().array());
  const double half_p = 0.5 * p;
  constexpr double kResidualFloor = 1e-12;

  Objective obj;
  obj.name = "pca_energy";
  obj.dim = d;
  obj.even = true;
  obj.eval = [X, sq_norms, half_p](const Eigen::Ref<const Vector>& v, const EvalKey&) {
    const double vv = v.squaredNorm();
    const Eigen::ArrayXd proj = (*X * v).array();
    const Eigen::ArrayXd residual = (*sq_norms - proj.square() / vv).max(0.0);
    return half_p == 1.0 ? residual.sum() : residual.pow(half_p).sum();
  };
  obj.ambient_gradient = [X, sq_norms, half_p, p](const Eigen::Ref<const Vector>& v) {
    const Eigen::ArrayXd proj = (*X * v).array();
    const Eigen::ArrayXd residual = *sq_norms - proj.square();
    Eigen::ArrayXd coeff(residual.size());
    for (Eigen::Index i = 0; i < residual.size(); ++i) {
      coeff[i] = residual[i] < kResidualFloor ? 0.0 : -p * std::pow(residual[i], half_p - 1.0) * proj[i];
    }
    return Vector(X->transpose() * coeff.matrix());
  };
  if (cloud.inlier_direction) obj.known_minimizer = cloud.inlier_direction;
  return obj;
}

PointCloud haystack(Eigen::Index d, std::size_t inliers, std::size_t outliers, Rng& rng) {
  if (d < 2) throw InvalidDimension("haystack needs d >= 2");
  if (inliers < 1) throw InvalidParameter("haystack needs at least one inlier");
  PointCloud cloud;
  const UnitVector w = sample_uniform(d, rng);
  cloud.inlier_direction = w;
  cloud.points.reserve(inliers + outliers);
  cloud.clean_inliers.reserve(inliers);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < inliers; ++i) {
    const double g = normal(rng);
    Vector clean = g * w.coords();
    Vector z(d);
    for (Eigen::Index k = 0; k < d; ++k) z[k] = normal(rng);
    cloud.points.push_back(clean + 1e-2 * z);
    cloud.clean_inliers.push_back(std::move(clean));
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < outliers; ++i) {
    Vector x(d);
    for (Eigen::Index k = 0; k < d; ++k) x[k] = scale * normal(rng);
    cloud.points.push_back(std::move(x));
  }
  return cloud;
}

Frame gaussian_frame(Eigen::Index d, std::size_t frame_size, const UnitVector& truth, Rng& rng) {
  if (frame_size < 1) throw InvalidParameter("gaussian_frame needs at least one frame vector");
  if (truth.dim() != d) throw InvalidInput("gaussian_frame: truth dimension does not match d");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(frame_size), d);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index k = 0; k < d; ++k) a(i, k) = normal(rng);
  Vector y = (a * truth.coords()).array().square();
  return Frame{std::move(a), std::move(y), truth};
}

Objective phase_retrieval_risk(const Frame& frame) {
  if (frame.vectors.rows() < 1) throw InvalidInput("phase_retrieval_risk: empty frame");
  auto A = std::make_shared<const Eigen::MatrixXd>(frame.vectors);
  auto y = std::make_shared<const Eigen::ArrayXd>(frame.measurements.array());
  const double inv_m = 1.0 / static_cast<double>(A->rows());

  Objective obj;
  obj.name = "phase_retrieval";
  obj.dim = A->cols();
  obj.even = true;
  obj.known_minimizer = frame.truth;
  obj.eval = [A, y, inv_m](const Eigen::Ref<const Vector>& v, const EvalKey&) {
    return inv_m * ((*A * v).array().square() - *y).square().sum();
  };
  obj.ambient_gradient = [A, y, inv_m](const Eigen::Ref<const Vector>& v) {
    const Eigen::ArrayXd proj = (*A * v).array();
    const Eigen::ArrayXd coeff = 4.0 * inv_m * (proj.square() - *y) * proj;
    return Vector(A->transpose() * coeff.matrix());
  };
  return obj;
}

PointCloud load_pointcloud_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open point cloud '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t col = 0;
    std::size_t start = 0;
    for (;;) {
      ++col;
      const std::size_t end = line.find(',', start);
      std::string_view cell(line.data() + start, (end == std::string::npos ? line.size() : end) - start);
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
      if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        throw ParseError(path.string() + ": row " + std::to_string(lineno) + ", column " + std::to_string(col) +
                         ": not a number: '" + std::string(cell) + "'");
      }
      row.push_back(value);
      if (end == std::string::npos) break;
      start = end + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path.string() + ": row " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                       " columns, expected " + std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": empty point cloud file");

  const auto d = static_cast<Eigen::Index>(rows.front().size());
  PointCloud cloud;
  Vector mean = Vector::Zero(d);
  for (const auto& r : rows) {
    cloud.points.emplace_back(Eigen::Map<const Vector>(r.data(), d));
    mean += cloud.points.back();
  }
  mean /= static_cast<double>(rows.size());
  for (auto& x : cloud.points) x -= mean;
  return cloud;
}

}  // namespace sphere_cbo
