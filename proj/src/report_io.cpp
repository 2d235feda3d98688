#include "sphere_cbo/report_io.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "json.hpp"

namespace sphere_cbo {

namespace {

using nlohmann::json;

std::string opt(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

/// JSON has no infinities; non-finite values become null.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
json num(const std::optional<double>& x) { return x ? num(*x) : json(nullptr); }

json vec(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num(v[i]));
  return out;
}

json record_json(const RunRecord& r) {
  return {{"run", r.run},
          {"success", r.success},
          {"error", num(r.error)},
          {"iterations", r.iterations},
          {"avg_agents", num(r.avg_agents)},
          {"objective_evals", r.objective_evals},
          {"stop_reason", std::string(to_string(r.stop_reason))}};
}

json records_json(const std::vector<RunRecord>& records) {
  json out = json::array();
  for (const auto& r : records) out.push_back(record_json(r));
  return out;
}

json config_json(const ConfigMap& config) {
  json out = json::object();
  for (const auto& [k, v] : config) out[k] = v;
  return out;
}

std::string document(std::string_view experiment, const ConfigMap& config, json rows) {
  json doc = {{"experiment", std::string(experiment)}, {"config", config_json(config)}, {"rows", std::move(rows)}};
  return doc.dump(2) + "\n";
}

}  // namespace

std::string sweep_csv(const SuccessTable& table) {
  std::ostringstream out;
  out << kSweepCsvHeader << '\n';
  for (const auto& r : table) {
    out << r.function << ',' << to_string(r.noise) << ',' << r.dim << ',' << r.n_agents << ',' << r.batch_size << ','
        << r.runs << ',' << format_double(r.success_rate) << ',' << opt(r.mean_error) << ','
        << format_double(r.n_avg_agents) << ',' << format_double(r.n_avg_iterations) << ',' << r.seed << '\n';
  }
  return out.str();
}

std::string single_run_csv(const SingleRunResult& r) {
  const RunReport& rep = r.report;
  std::ostringstream out;
  out << "function,noise,d,N,M,seed,iterations,stop_reason,success,sup_error,best_value,N_avg,N_final,"
         "objective_evals,gradient_steps";
  for (Eigen::Index i = 0; i < r.dim; ++i) out << ",v" << i;
  out << '\n';
  out << r.function << ',' << to_string(r.noise) << ',' << r.dim << ',' << r.n_agents << ',' << r.batch_size << ','
      << r.seed << ',' << rep.iterations << ',' << to_string(rep.stop_reason) << ','
      << (rep.success ? (*rep.success ? "1" : "0") : "") << ',' << opt(rep.sup_error) << ','
      << format_double(rep.final_consensus.best_value) << ',' << format_double(rep.avg_agents) << ','
      << rep.final_agents << ',' << rep.objective_evals << ',' << rep.gradient_steps;
  for (Eigen::Index i = 0; i < rep.final_consensus.point.size(); ++i) {
    out << ',' << format_double(rep.final_consensus.point[i]);
  }
  out << '\n';
  return out.str();
}

std::string robust_pca_csv(const std::vector<RobustPcaRow>& rows, double p, std::uint64_t seed) {
  std::ostringstream out;
  out << "outlier_fraction,outliers,p,runs,mean_error,median_error,max_error,success_rate,seed\n";
  for (const auto& r : rows) {
    out << format_double(r.outlier_fraction) << ',' << r.outliers << ',' << format_double(p) << ',' << r.runs << ','
        << format_double(r.mean_error) << ',' << format_double(r.median_error) << ',' << format_double(r.max_error)
        << ',' << format_double(r.success_rate) << ',' << seed << '\n';
  }
  return out.str();
}

std::string phase_retrieval_csv(const std::vector<PhaseRetrievalSeries>& series, Eigen::Index dim,
                                std::uint64_t seed) {
  std::ostringstream out;
  out << "noise,d,frame_size,runs,successes,success_rate,mean_error,rate_low,rate_high,seed\n";
  for (const auto& [noise, rows] : series) {
    for (const auto& r : rows) {
      out << to_string(noise) << ',' << dim << ',' << r.frame_size << ',' << r.runs << ',' << r.successes << ','
          << format_double(r.success_rate) << ',' << opt(r.mean_error) << ',' << format_double(r.rate_interval.low)
          << ',' << format_double(r.rate_interval.high) << ',' << seed << '\n';
    }
  }
  return out.str();
}

std::string property_csv(const std::vector<PropertyResult>& results) {
  std::ostringstream out;
  out << "property,trials,failures,worst,passed\n";
  for (const auto& r : results) {
    out << r.name << ',' << r.trials << ',' << r.failures << ',' << format_double(r.worst) << ','
        << (r.passed() ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string sweep_json(const SuccessTable& table, const ConfigMap& config) {
  json rows = json::array();
  for (const auto& r : table) {
    rows.push_back({{"function", r.function},
                    {"noise", std::string(to_string(r.noise))},
                    {"d", r.dim},
                    {"N", r.n_agents},
                    {"M", r.batch_size},
                    {"runs", r.runs},
                    {"successes", r.successes},
                    {"success_rate", num(r.success_rate)},
                    {"mean_error", num(r.mean_error)},
                    {"N_avg", num(r.n_avg_agents)},
                    {"n_avg", num(r.n_avg_iterations)},
                    {"stalled_runs", r.stalled_runs},
                    {"rate_interval", {num(r.rate_interval.low), num(r.rate_interval.high)}},
                    {"seed", r.seed},
                    {"records", records_json(r.records)}});
  }
  return document("benchmark-sweep", config, std::move(rows));
}

std::string single_run_json(const SingleRunResult& r, const ConfigMap& config) {
  const RunReport& rep = r.report;
  json row = {{"function", r.function},
              {"noise", std::string(to_string(r.noise))},
              {"d", r.dim},
              {"N", r.n_agents},
              {"M", r.batch_size},
              {"seed", r.seed},
              {"iterations", rep.iterations},
              {"stop_reason", std::string(to_string(rep.stop_reason))},
              {"success", rep.success ? json(*rep.success) : json(nullptr)},
              {"sup_error", num(rep.sup_error)},
              {"best_value", num(rep.final_consensus.best_value)},
              {"N_avg", num(rep.avg_agents)},
              {"N_final", rep.final_agents},
              {"objective_evals", rep.objective_evals},
              {"gradient_steps", rep.gradient_steps},
              {"consensus", vec(rep.final_consensus.point)}};
  return document("single-run", config, json::array({std::move(row)}));
}

std::string robust_pca_json(const std::vector<RobustPcaRow>& rows, double p, std::uint64_t seed,
                            const ConfigMap& config) {
  json out = json::array();
  for (const auto& r : rows) {
    json errors = json::array();
    for (double e : r.errors) errors.push_back(num(e));
    out.push_back({{"outlier_fraction", num(r.outlier_fraction)},
                   {"outliers", r.outliers},
                   {"p", num(p)},
                   {"runs", r.runs},
                   {"mean_error", num(r.mean_error)},
                   {"median_error", num(r.median_error)},
                   {"max_error", num(r.max_error)},
                   {"success_rate", num(r.success_rate)},
                   {"seed", seed},
                   {"errors", std::move(errors)}});
  }
  return document("robust-pca", config, std::move(out));
}

std::string phase_retrieval_json(const std::vector<PhaseRetrievalSeries>& series, Eigen::Index dim,
                                 std::uint64_t seed, const ConfigMap& config) {
  json out = json::array();
  for (const auto& [noise, rows] : series) {
    for (const auto& r : rows) {
      out.push_back({{"noise", std::string(to_string(noise))},
                     {"d", dim},
                     {"frame_size", r.frame_size},
                     {"runs", r.runs},
                     {"successes", r.successes},
                     {"success_rate", num(r.success_rate)},
                     {"mean_error", num(r.mean_error)},
                     {"rate_interval", {num(r.rate_interval.low), num(r.rate_interval.high)}},
                     {"seed", seed},
                     {"records", records_json(r.records)}});
    }
  }
  return document("phase-retrieval", config, std::move(out));
}

std::string property_json(const std::vector<PropertyResult>& results, const ConfigMap& config) {
  json out = json::array();
  for (const auto& r : results) {
    out.push_back({{"property", r.name},
                   {"trials", r.trials},
                   {"failures", r.failures},
                   {"worst", num(r.worst)},
                   {"passed", r.passed()}});
  }
  return document("property-suite", config, std::move(out));
}

ConfigMap config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("result document: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("config") || !doc["config"].is_object()) {
    throw ParseError("result document has no config object");
  }
  ConfigMap out;
  for (const auto& [k, v] : doc["config"].items()) {
    if (!v.is_string()) throw ParseError("config value for '" + k + "' is not a string");
    out[k] = v.get<std::string>();
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace sphere_cbo
