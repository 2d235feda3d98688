#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sphere_cbo/dynamics.hpp"
#include "sphere_cbo/errors.hpp"
#include "sphere_cbo/gradient_kv.hpp"
#include "sphere_cbo/objectives.hpp"

namespace sphere_cbo {

/// Invalid configuration: unknown key, bad value or violated constraint.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class ExperimentKind { single_run, benchmark_sweep, robust_pca, phase_retrieval, property_suite };

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(std::string_view s);

/// Everything a CLI invocation needs. Fields that accept comma lists
/// (function, noise, n-agents, batch-size) describe a sweep grid; single
/// runs use their first entry.
struct RunConfig {
  ExperimentKind kind = ExperimentKind::single_run;
  SolverParams params;

  /// Test function names, or "pca" / "phase-retrieval" for single runs.
  std::vector<std::string> functions{"ackley"};
  std::vector<NoiseMode> noise_modes{NoiseMode::anisotropic};
  std::vector<std::size_t> agent_counts{200};
  std::vector<std::size_t> batch_sizes{120};

  Eigen::Index dim = 20;
  double rotation = 0.0;
  std::optional<double> vmf_kappa;  ///< init = vmf around v* when set
  XsyNoise xsy_noise = XsyNoise::redraw;
  std::size_t runs = 1;

  // robust PCA
  std::vector<double> outlier_fractions{0.05, 0.25, 0.5, 0.75, 0.95};
  double p = 1.0;
  std::size_t points = 200;
  double pca_tolerance = 5e-2;
  std::string cloud_path;  ///< CSV point cloud for single-run "pca"

  // phase retrieval
  std::vector<std::size_t> frame_sizes{20, 40, 100};

  bool gradient = false;
  GkvParams gkv;

  std::string csv_path;
  std::string json_path;

  bool operator==(const RunConfig&) const = default;
};

using ConfigMap = std::map<std::string, std::string>;

/// Reads `key = value` lines. '#' starts a comment, `[section]` headers are
/// accepted and ignored, '_' in keys is read as '-'.
ConfigMap read_config_file(const std::filesystem::path& path);

/// Every key understood by apply_config, in canonical (dash) spelling.
const std::vector<std::string>& config_keys();

/// Builds a validated RunConfig from defaults + `values`. Throws ConfigError
/// naming the key and the violated constraint. When `values` has no seed,
/// the SPHERE_CBO_SEED environment variable is consulted.
RunConfig apply_config(const ConfigMap& values, ExperimentKind kind);

/// File values first, then `overrides` (CLI flags) on top.
RunConfig parse_config(const std::optional<std::filesystem::path>& file, const ConfigMap& overrides,
                       ExperimentKind kind);

/// Canonical key/value form of a config; apply_config(echo_config(c)) == c.
ConfigMap echo_config(const RunConfig& c);

/// Validates cross-field constraints (list lengths, solver invariants, files).
void validate(const RunConfig& c);

/// Solver parameters for the i-th (N, M, noise) combination of the grid.
SolverParams params_for(const RunConfig& c, std::size_t agents_index, NoiseMode noise);

/// Formats a double with 17 significant digits ("inf" for infinity).
std::string format_double(double x);

}  // namespace sphere_cbo
