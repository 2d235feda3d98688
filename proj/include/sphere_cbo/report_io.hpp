#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sphere_cbo/config.hpp"
#include "sphere_cbo/dynamics.hpp"
#include "sphere_cbo/experiments.hpp"

namespace sphere_cbo {

/// A single solver run together with what it was run on.
struct SingleRunResult {
  std::string function;
  NoiseMode noise = NoiseMode::anisotropic;
  Eigen::Index dim = 0;
  std::size_t n_agents = 0;
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
  RunReport report;
};

/// Phase retrieval curve for one noise model.
struct PhaseRetrievalSeries {
  NoiseMode noise = NoiseMode::anisotropic;
  std::vector<PhaseRetrievalRow> rows;
};

/// Column order of the benchmark sweep table.
inline constexpr const char* kSweepCsvHeader = "function,noise,d,N,M,runs,success_rate,mean_error,N_avg,n_avg,seed";

// CSV tables: header row, then one row per result. Floats use 17 significant
// digits, missing values are left empty.
std::string sweep_csv(const SuccessTable& table);
std::string single_run_csv(const SingleRunResult& r);
std::string robust_pca_csv(const std::vector<RobustPcaRow>& rows, double p, std::uint64_t seed);
std::string phase_retrieval_csv(const std::vector<PhaseRetrievalSeries>& series, Eigen::Index dim,
                                std::uint64_t seed);
std::string property_csv(const std::vector<PropertyResult>& results);

// JSON documents: {"experiment", "config", "rows", ...}. Per-run records are
// always included.
std::string sweep_json(const SuccessTable& table, const ConfigMap& config);
std::string single_run_json(const SingleRunResult& r, const ConfigMap& config);
std::string robust_pca_json(const std::vector<RobustPcaRow>& rows, double p, std::uint64_t seed,
                            const ConfigMap& config);
std::string phase_retrieval_json(const std::vector<PhaseRetrievalSeries>& series, Eigen::Index dim,
                                 std::uint64_t seed, const ConfigMap& config);
std::string property_json(const std::vector<PropertyResult>& results, const ConfigMap& config);

/// Reads the "config" object of a document written by the *_json functions.
ConfigMap config_from_json(const std::string& document);

/// Writes `content` to `path` (truncating). Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace sphere_cbo
