#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sphere_cbo/dynamics.hpp"
#include "sphere_cbo/gradient_kv.hpp"
#include "sphere_cbo/objectives.hpp"

namespace sphere_cbo {

/// One benchmark run, kept so tables can be re-aggregated later.
struct RunRecord {
  std::size_t run = 0;
  bool success = false;
  double error = 0.0;
  std::size_t iterations = 0;
  double avg_agents = 0.0;
  std::uint64_t objective_evals = 0;
  StopReason stop_reason = StopReason::max_iter;
};

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

/// Wilson score interval for a binomial proportion (z = 1.96 gives 95%).
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96);

/// Initial distribution for benchmark runs: uniform, or vMF around the
/// minimizer with the given concentration.
struct BenchmarkInit {
  std::optional<double> vmf_kappa;
};

struct SweepCase {
  TestFunction function = TestFunction::ackley;
  Eigen::Index dim = 20;
  double rotation = 0.0;  ///< angle of v* away from e_d
  SolverParams params;
};

struct ExperimentSpec {
  std::vector<SweepCase> cases;
  std::size_t runs = 20;
  BenchmarkInit init;
  XsyNoise xsy_noise = XsyNoise::redraw;
  std::uint64_t seed = 0;
  unsigned threads = 1;  ///< runs executed concurrently
};

struct SuccessRow {
  std::string function;
  NoiseMode noise = NoiseMode::anisotropic;
  Eigen::Index dim = 0;
  std::size_t n_agents = 0;
  std::size_t batch_size = 0;
  std::size_t runs = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  std::optional<double> mean_error;  ///< over successful runs only
  double n_avg_agents = 0.0;
  double n_avg_iterations = 0.0;
  std::size_t stalled_runs = 0;
  Interval rate_interval;
  std::uint64_t seed = 0;
  std::vector<RunRecord> records;
};

using SuccessTable = std::vector<SuccessRow>;

/// Seed of the random objective (XSY) used by run `run` of a sweep.
std::uint64_t objective_seed(std::uint64_t seed, std::size_t run);

/// Runs every case `runs` times. Run r of every case uses the stream derived
/// from (seed, r), so results do not depend on scheduling.
SuccessTable benchmark_sweep(const ExperimentSpec& spec);

/// Dominant eigenvector of (1/P) sum x_i x_i^T. Sign fixed so the largest
/// magnitude component is positive. Throws ConvergenceFailure if the residual
/// |Av - theta v| stays above tol * theta after `iters` iterations.
UnitVector power_iteration_top_direction(const std::vector<Vector>& points, std::size_t iters = 1000,
                                         double tol = 1e-10);
UnitVector power_iteration_top_direction(const PointCloud& cloud, std::size_t iters = 1000, double tol = 1e-10);

/// min(|v - u|, |v + u|).
double sign_folded_distance(const Vector& v, const Vector& u);

struct RobustPcaSpec {
  Eigen::Index dim = 30;
  std::size_t points = 200;
  std::vector<double> outlier_fractions{0.05, 0.25, 0.5, 0.75, 0.95};
  double p = 1.0;
  SolverParams params;
  std::optional<GkvParams> gradient;
  std::size_t runs = 10;
  double tolerance = 5e-2;  ///< error counted as a success below this
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct RobustPcaRow {
  double outlier_fraction = 0.0;
  std::size_t outliers = 0;
  std::size_t runs = 0;
  std::vector<double> errors;  ///< sign-folded distance to the noiseless inlier direction
  double mean_error = 0.0;
  double median_error = 0.0;
  double max_error = 0.0;
  double success_rate = 0.0;  ///< fraction of errors <= tolerance
};

std::vector<RobustPcaRow> robust_pca_experiment(const RobustPcaSpec& spec);

struct PhaseRetrievalSpec {
  Eigen::Index dim = 10;
  std::vector<std::size_t> frame_sizes{20, 40, 100};
  SolverParams params;
  std::size_t runs = 10;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct PhaseRetrievalRow {
  std::size_t frame_size = 0;
  std::size_t runs = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  std::optional<double> mean_error;
  Interval rate_interval;
  std::vector<RunRecord> records;
};

std::vector<PhaseRetrievalRow> phase_retrieval_curve(const PhaseRetrievalSpec& spec);

/// Randomized checks of the structural identities the method relies on.
struct PropertyResult {
  std::string name;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double worst = 0.0;  ///< largest observed violation measure
  bool passed() const { return failures == 0; }
};

std::vector<PropertyResult> property_suite(std::uint64_t seed, std::size_t trials = 100);

}  // namespace sphere_cbo
