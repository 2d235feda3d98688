#include "sphere_cbo/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "sphere_cbo/consensus.hpp"
#include "sphere_cbo/errors.hpp"

namespace sphere_cbo {

namespace {

// Calls fn(i) for i in [0, count) on up to `threads` workers. Each index is
// independent, so the schedule does not affect results.
template <typename Fn>
void for_each_index(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < count; i = next++) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

RunRecord to_record(std::size_t run, const RunReport& rep) {
  RunRecord rec;
  rec.run = run;
  rec.success = rep.success.value_or(false);
  rec.error = rep.sup_error.value_or(std::nan(""));
  rec.iterations = rep.iterations;
  rec.avg_agents = rep.avg_agents;
  rec.objective_evals = rep.objective_evals;
  rec.stop_reason = rep.stop_reason;
  return rec;
}

std::optional<double> mean_success_error(const std::vector<RunRecord>& records) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.success) {
      sum += r.error;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

constexpr std::uint64_t kObjectiveStreamTag = 0x0b1ec7ULL;

}  // namespace

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

std::uint64_t objective_seed(std::uint64_t seed, std::size_t run) {
  return derive_stream(seed, {run, kObjectiveStreamTag})();
}

SuccessTable benchmark_sweep(const ExperimentSpec& spec) {
  if (spec.runs < 1) throw InvalidParameter("runs must be >= 1");
  SuccessTable table;
  for (const SweepCase& c : spec.cases) {
    validate(c.params);
    SuccessRow row;
    row.function = std::string(to_string(c.function));
    row.noise = c.params.noise;
    row.dim = c.dim;
    row.n_agents = c.params.n_agents;
    row.batch_size = c.params.batch_size;
    row.runs = spec.runs;
    row.seed = spec.seed;
    row.records.resize(spec.runs);

    for_each_index(spec.runs, spec.threads, [&](std::size_t r) {
      Rng rng = derive_stream(spec.seed, {r});
      TestFunctionOptions opts;
      opts.seed = objective_seed(spec.seed, r);
      opts.xsy_noise = spec.xsy_noise;
      const UnitVector minimizer = rotated_minimizer(c.dim, c.rotation);
      const Objective obj = make_test_function(c.function, c.dim, minimizer, opts);
      InitSpec init = UniformInit{};
      if (spec.init.vmf_kappa) init = VmfInit{minimizer, *spec.init.vmf_kappa};
      row.records[r] = to_record(r, run(obj, c.params, init, rng));
    });

    double agents = 0.0, iters = 0.0;
    for (const auto& rec : row.records) {
      row.successes += rec.success ? 1 : 0;
      row.stalled_runs += rec.stop_reason == StopReason::stall ? 1 : 0;
      agents += rec.avg_agents;
      iters += static_cast<double>(rec.iterations);
    }
    const double runs = static_cast<double>(spec.runs);
    row.success_rate = static_cast<double>(row.successes) / runs;
    row.mean_error = mean_success_error(row.records);
    row.n_avg_agents = agents / runs;
    row.n_avg_iterations = iters / runs;
    row.rate_interval = wilson_interval(row.successes, spec.runs);
    table.push_back(std::move(row));
  }
  return table;
}

UnitVector power_iteration_top_direction(const std::vector<Vector>& points, std::size_t iters, double tol) {
  if (points.empty()) throw InvalidInput("power iteration: empty point set");
  const Eigen::Index d = points.front().size();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& x : points) {
    if (x.size() != d) throw InvalidInput("power iteration: points have mixed dimensions");
    cov.selfadjointView<Eigen::Lower>().rankUpdate(x);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(points.size());

  Rng start_rng = derive_stream(0x5eedULL);
  Vector v = sample_uniform(d, start_rng).coords();
  double residual = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < iters; ++it) {
    const Vector w = cov * v;
    const double theta = v.dot(w);
    const double wn = w.norm();
    if (!(wn > 0.0)) throw ConvergenceFailure("power iteration: covariance annihilates the iterate");
    residual = (w - theta * v).norm();
    if (theta > 0.0 && residual <= tol * theta) break;
    v = w / wn;
  }
  if (!(residual <= tol * v.dot(cov * v))) {
    throw ConvergenceFailure("power iteration did not converge, residual " + std::to_string(residual));
  }
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (v[k] < 0.0) v = -v;
  return renormalize(v);
}

UnitVector power_iteration_top_direction(const PointCloud& cloud, std::size_t iters, double tol) {
  return power_iteration_top_direction(cloud.points, iters, tol);
}

double sign_folded_distance(const Vector& v, const Vector& u) { return std::min((v - u).norm(), (v + u).norm()); }

std::vector<RobustPcaRow> robust_pca_experiment(const RobustPcaSpec& spec) {
  validate(spec.params);
  if (spec.runs < 1) throw InvalidParameter("runs must be >= 1");
  if (spec.points < 2) throw InvalidParameter("robust PCA needs at least two points");
  std::vector<RobustPcaRow> rows;
  for (std::size_t fi = 0; fi < spec.outlier_fractions.size(); ++fi) {
    const double frac = spec.outlier_fractions[fi];
    if (!(frac >= 0.0 && frac < 1.0)) throw InvalidParameter("outlier fractions must lie in [0, 1)");
    RobustPcaRow row;
    row.outlier_fraction = frac;
    row.outliers = static_cast<std::size_t>(std::lround(frac * static_cast<double>(spec.points)));
    row.outliers = std::min(row.outliers, spec.points - 1);
    row.runs = spec.runs;
    row.errors.resize(spec.runs);

    for_each_index(spec.runs, spec.threads, [&](std::size_t r) {
      Rng rng = derive_stream(spec.seed, {r, fi});
      const PointCloud cloud = haystack(spec.dim, spec.points - row.outliers, row.outliers, rng);
      const Objective obj = pca_energy(cloud, spec.p);
      const UnitVector oracle = power_iteration_top_direction(cloud.clean_inliers);
      RunOptions opts;
      opts.gradient = spec.gradient;
      const RunReport rep = run(obj, spec.params, UniformInit{}, rng, opts);
      const UnitVector found = renormalize(rep.final_consensus.point);
      row.errors[r] = sign_folded_distance(found.coords(), oracle.coords());
    });

    std::vector<double> sorted = row.errors;
    std::sort(sorted.begin(), sorted.end());
    row.mean_error = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    const std::size_t mid = sorted.size() / 2;
    row.median_error = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    row.max_error = sorted.back();
    row.success_rate = static_cast<double>(std::count_if(sorted.begin(), sorted.end(),
                                                         [&](double e) { return e <= spec.tolerance; })) /
                       static_cast<double>(sorted.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<PhaseRetrievalRow> phase_retrieval_curve(const PhaseRetrievalSpec& spec) {
  validate(spec.params);
  if (spec.frame_sizes.empty()) throw InvalidParameter("phase retrieval needs at least one frame size");
  if (spec.runs < 1) throw InvalidParameter("runs must be >= 1");
  std::vector<PhaseRetrievalRow> rows;
  for (std::size_t mi = 0; mi < spec.frame_sizes.size(); ++mi) {
    PhaseRetrievalRow row;
    row.frame_size = spec.frame_sizes[mi];
    row.runs = spec.runs;
    row.records.resize(spec.runs);
    for_each_index(spec.runs, spec.threads, [&](std::size_t r) {
      Rng rng = derive_stream(spec.seed, {r, mi});
      const UnitVector truth = sample_uniform(spec.dim, rng);
      const Frame frame = gaussian_frame(spec.dim, row.frame_size, truth, rng);
      const Objective obj = phase_retrieval_risk(frame);
      row.records[r] = to_record(r, run(obj, spec.params, UniformInit{}, rng));
    });
    for (const auto& rec : row.records) row.successes += rec.success ? 1 : 0;
    row.success_rate = static_cast<double>(row.successes) / static_cast<double>(spec.runs);
    row.mean_error = mean_success_error(row.records);
    row.rate_interval = wilson_interval(row.successes, spec.runs);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<PropertyResult> property_suite(std::uint64_t seed, std::size_t trials) {
  Rng rng = derive_stream(seed, {0x9a0bULL});
  std::uniform_int_distribution<int> pick_dim(2, 12);
  std::uniform_int_distribution<int> pick_n(1, 40);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  PropertyResult variance{"variance_identity"}, tangent{"tangent_projection"}, noise{"noise_tangency"},
      sphere{"sphere_preservation"}, convex{"consensus_convexity"}, laplace{"laplace_monotone"},
      second{"moment_bound_second"}, first{"moment_bound_first"};
  auto record = [](PropertyResult& r, double violation) {
    ++r.trials;
    r.worst = std::max(r.worst, violation);
    if (violation > 0.0) ++r.failures;
  };

  for (std::size_t t = 0; t < trials; ++t) {
    const Eigen::Index d = pick_dim(rng);
    const std::size_t n = static_cast<std::size_t>(pick_n(rng));
    Ensemble e = sample_uniform_ensemble(n, d, rng);
    std::vector<double> values(n);
    for (auto& v : values) v = 0.5 * unit(rng);
    const double alpha = 5.0 * unit(rng);

    const EnsembleStats st = ensemble_stats(e);
    record(variance, std::max(0.0, std::abs(0.5 * st.empirical_variance - st.half_variance) - 1e-10));

    const UnitVector v = sample_uniform(d, rng);
    Vector y(d);
    for (Eigen::Index k = 0; k < d; ++k) y[k] = standard_normal(rng);
    record(tangent, std::max(0.0, std::abs(v.coords().dot(project_tangent(v, y))) - 1e-12 * y.norm()));

    const ConsensusPoint cp = consensus_point(e, values, alpha);
    const double wsum = std::accumulate(cp.weights.begin(), cp.weights.end(), 0.0);
    record(convex, std::max({0.0, cp.point.norm() - 1.0 - 1e-12, std::abs(wsum - 1.0) - 1e-12}));

    const StepCoefficients coeffs{1.0, 3.0 * unit(rng), 0.1 * unit(rng) + 1e-3};
    for (NoiseMode mode : {NoiseMode::anisotropic, NoiseMode::isotropic}) {
      for (std::size_t i = 0; i < n; ++i) {
        Vector z(d);
        for (Eigen::Index k = 0; k < d; ++k) z[k] = standard_normal(rng);
        const Vector vi = e.agent(i).transpose();
        const AgentIncrement inc = mode == NoiseMode::anisotropic ? anisotropic_increment(vi, cp.point, coeffs, z)
                                                                  : isotropic_increment(vi, cp.point, coeffs, z);
        record(noise, std::max(0.0, std::abs(vi.dot(inc.noise)) - 1e-12 * std::max(1.0, inc.noise.norm())));
      }
      Ensemble moved = e;
      step_ensemble(moved, mode, {std::span(&cp.point, 1), {}}, coeffs, draw_unit_normals(n, d, rng));
      double worst = 0.0;
      for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(moved.agent(i).norm() - 1.0));
      record(sphere, std::max(0.0, worst - 1e-12));
    }

    double prev = laplace_functional(values, 1.0);
    double lap_violation = 0.0;
    const double lo = *std::min_element(values.begin(), values.end());
    for (double a : {10.0, 100.0, 1000.0}) {
      const double cur = laplace_functional(values, a);
      lap_violation = std::max({lap_violation, cur - prev - 1e-10, lo - cur - 1e-10});
      prev = cur;
    }
    record(laplace, std::max(0.0, lap_violation));

    // moment bounds against the weight-ratio constant e^{-a E_min} / mean(e^{-a E})
    double mean_shifted = 0.0;
    for (double val : values) mean_shifted += std::exp(-alpha * (val - lo));
    mean_shifted /= static_cast<double>(n);
    const double ratio = 1.0 / mean_shifted;
    double m2 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dist = (e.agent(i).transpose() - cp.point).norm();
      m2 += dist * dist;
      m1 += dist;
    }
    m2 /= static_cast<double>(n);
    m1 /= static_cast<double>(n);
    const double vhalf = std::max(0.0, st.half_variance);
    record(second, std::max(0.0, m2 - 4.0 * ratio * vhalf - 1e-12));
    record(first, std::max(0.0, m1 - 2.0 * ratio * std::sqrt(vhalf) - 1e-12));
  }
  return {variance, tangent, noise, sphere, convex, laplace, second, first};
}

}  // namespace sphere_cbo
