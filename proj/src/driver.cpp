#include "sphere_cbo/driver.hpp"

#include <cmath>
#include <sstream>

#include "sphere_cbo/experiments.hpp"
#include "sphere_cbo/report_io.hpp"

namespace sphere_cbo {

namespace {

constexpr std::uint64_t kDataStreamTag = 0xda7aULL;

std::size_t outlier_count(double fraction, std::size_t points) {
  const auto k = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(points)));
  return std::min(k, points - 1);
}

Objective single_run_objective(const RunConfig& c, std::optional<UnitVector>& init_center) {
  const std::string& f = c.functions.front();
  Rng data_rng = derive_stream(c.params.seed, {kDataStreamTag});
  if (f == "pca") {
    PointCloud cloud;
    if (!c.cloud_path.empty()) {
      cloud = load_pointcloud_csv(c.cloud_path);
    } else {
      const std::size_t outliers = outlier_count(c.outlier_fractions.front(), c.points);
      cloud = haystack(c.dim, c.points - outliers, outliers, data_rng);
    }
    Objective obj = pca_energy(cloud, c.p);
    if (!cloud.clean_inliers.empty()) obj.known_minimizer = power_iteration_top_direction(cloud.clean_inliers);
    return obj;
  }
  if (f == "phase-retrieval") {
    const UnitVector truth = sample_uniform(c.dim, data_rng);
    return phase_retrieval_risk(gaussian_frame(c.dim, c.frame_sizes.front(), truth, data_rng));
  }
  TestFunctionOptions opts;
  opts.seed = objective_seed(c.params.seed, 0);
  opts.xsy_noise = c.xsy_noise;
  const UnitVector minimizer = rotated_minimizer(c.dim, c.rotation);
  init_center = minimizer;
  return make_test_function(parse_test_function(f), c.dim, minimizer, opts);
}

ExperimentOutput single_run(const RunConfig& c, const ConfigMap& echo) {
  std::optional<UnitVector> center;
  const Objective obj = single_run_objective(c, center);
  const SolverParams p = params_for(c, 0, c.noise_modes.front());
  InitSpec init = UniformInit{};
  if (c.vmf_kappa) {
    if (!center) throw ConfigError("config key 'init': vmf initialization needs a test function with known minimizer");
    init = VmfInit{*center, *c.vmf_kappa};
  }
  RunOptions opts;
  if (c.gradient) opts.gradient = c.gkv;
  Rng rng = derive_stream(p.seed, {0});

  SingleRunResult r;
  r.function = c.functions.front();
  r.noise = p.noise;
  r.dim = obj.dim;
  r.n_agents = p.n_agents;
  r.batch_size = p.batch_size;
  r.seed = p.seed;
  r.report = run(obj, p, init, rng, opts);

  std::ostringstream s;
  s << r.function << " (" << to_string(r.noise) << ", d=" << r.dim << "): " << r.report.iterations
    << " iterations, stop=" << to_string(r.report.stop_reason)
    << ", best E=" << format_double(r.report.final_consensus.best_value);
  if (r.report.sup_error) {
    s << ", sup error=" << format_double(*r.report.sup_error) << (*r.report.success ? " (success)" : " (failure)");
  }
  s << '\n';
  return {single_run_csv(r), single_run_json(r, echo), s.str()};
}

ExperimentOutput sweep(const RunConfig& c, const ConfigMap& echo) {
  ExperimentSpec spec;
  spec.runs = c.runs;
  spec.init.vmf_kappa = c.vmf_kappa;
  spec.xsy_noise = c.xsy_noise;
  spec.seed = c.params.seed;
  spec.threads = c.params.threads;
  for (const auto& f : c.functions) {
    for (NoiseMode m : c.noise_modes) {
      for (std::size_t i = 0; i < c.agent_counts.size(); ++i) {
        SweepCase sc;
        sc.function = parse_test_function(f);
        sc.dim = c.dim;
        sc.rotation = c.rotation;
        sc.params = params_for(c, i, m);
        spec.cases.push_back(sc);
      }
    }
  }
  const SuccessTable table = benchmark_sweep(spec);
  std::ostringstream s;
  for (const auto& r : table) {
    s << r.function << ' ' << to_string(r.noise) << " N=" << r.n_agents << " M=" << r.batch_size << ": "
      << r.successes << '/' << r.runs << " successes";
    if (r.mean_error) s << ", mean error " << format_double(*r.mean_error);
    s << ", n_avg " << format_double(r.n_avg_iterations) << '\n';
  }
  return {sweep_csv(table), sweep_json(table, echo), s.str()};
}

ExperimentOutput robust_pca(const RunConfig& c, const ConfigMap& echo) {
  RobustPcaSpec spec;
  spec.dim = c.dim;
  spec.points = c.points;
  spec.outlier_fractions = c.outlier_fractions;
  spec.p = c.p;
  spec.params = params_for(c, 0, c.noise_modes.front());
  if (c.gradient) spec.gradient = c.gkv;
  spec.runs = c.runs;
  spec.tolerance = c.pca_tolerance;
  spec.seed = c.params.seed;
  spec.threads = c.params.threads;
  const auto rows = robust_pca_experiment(spec);
  std::ostringstream s;
  for (const auto& r : rows) {
    s << "outliers " << format_double(r.outlier_fraction) << ": mean error " << format_double(r.mean_error)
      << ", max " << format_double(r.max_error) << '\n';
  }
  return {robust_pca_csv(rows, c.p, spec.seed), robust_pca_json(rows, c.p, spec.seed, echo), s.str()};
}

ExperimentOutput phase_retrieval(const RunConfig& c, const ConfigMap& echo) {
  std::vector<PhaseRetrievalSeries> series;
  std::ostringstream s;
  for (NoiseMode m : c.noise_modes) {
    PhaseRetrievalSpec spec;
    spec.dim = c.dim;
    spec.frame_sizes = c.frame_sizes;
    spec.params = params_for(c, 0, m);
    spec.runs = c.runs;
    spec.seed = c.params.seed;
    spec.threads = c.params.threads;
    series.push_back({m, phase_retrieval_curve(spec)});
    for (const auto& r : series.back().rows) {
      s << to_string(m) << " M=" << r.frame_size << ": " << r.successes << '/' << r.runs << " successes\n";
    }
  }
  return {phase_retrieval_csv(series, c.dim, c.params.seed),
          phase_retrieval_json(series, c.dim, c.params.seed, echo), s.str()};
}

ExperimentOutput properties(const RunConfig& c, const ConfigMap& echo) {
  const auto results = property_suite(c.params.seed, 100 * c.runs);
  std::ostringstream s;
  for (const auto& r : results) {
    s << (r.passed() ? "ok   " : "FAIL ") << r.name << " (" << r.failures << '/' << r.trials
      << " failures, worst " << format_double(r.worst) << ")\n";
  }
  return {property_csv(results), property_json(results, echo), s.str()};
}

}  // namespace

ExperimentOutput execute(const RunConfig& c) {
  const ConfigMap echo = echo_config(c);
  switch (c.kind) {
    case ExperimentKind::single_run: return single_run(c, echo);
    case ExperimentKind::benchmark_sweep: return sweep(c, echo);
    case ExperimentKind::robust_pca: return robust_pca(c, echo);
    case ExperimentKind::phase_retrieval: return phase_retrieval(c, echo);
    case ExperimentKind::property_suite: return properties(c, echo);
  }
  throw ConfigError("unknown experiment kind");
}

}  // namespace sphere_cbo
