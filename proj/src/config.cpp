#include "sphere_cbo/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

namespace sphere_cbo {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string canonical_key(std::string key) {
  for (char& ch : key)
    if (ch == '_') ch = '-';
  return key;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto end = s.find(',', start);
    out.push_back(trim(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start)));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw ConfigError("config key '" + key + "': " + why);
}

double to_double(const std::string& key, const std::string& s, bool allow_inf = false) {
  if (allow_inf && (s == "inf" || s == "+inf" || s == "infinity")) return kAlphaInfinity;
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    bad(key, "expected a finite number, got '" + s + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    bad(key, "expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

std::size_t to_size(const std::string& key, const std::string& s) { return static_cast<std::size_t>(to_u64(key, s)); }

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  bad(key, "expected true/false, got '" + s + "'");
}

template <typename T, typename Fn>
std::vector<T> to_list(const std::string& key, const std::string& s, Fn&& one) {
  std::vector<T> out;
  for (const auto& item : split_list(s)) out.push_back(one(key, item));
  if (out.empty()) bad(key, "empty list");
  return out;
}

template <typename T, typename Fn>
std::string join(const std::vector<T>& xs, Fn&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += fmt(xs[i]);
  }
  return out;
}

std::string batch_mode_name(BatchMode m) {
  switch (m) {
    case BatchMode::full: return "full";
    case BatchMode::random_subset: return "random";
    case BatchMode::disjoint_partition: return "partition";
  }
  return "random";
}

bool is_special_objective(const std::string& f) { return f == "pca" || f == "phase-retrieval"; }

struct KeyDef {
  std::string name;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::optional<std::string>(const RunConfig&)> get;
};

std::string dbl(double x) { return format_double(x); }
std::string num(std::uint64_t x) { return std::to_string(x); }

const std::vector<KeyDef>& key_table() {
  using S = const std::string&;
  static const std::vector<KeyDef> table = {
      {"lambda", [](RunConfig& c, S k, S v) { c.params.lambda = to_double(k, v); },
       [](const RunConfig& c) { return dbl(c.params.lambda); }},
      {"sigma", [](RunConfig& c, S k, S v) { c.params.sigma = to_double(k, v); },
       [](const RunConfig& c) { return dbl(c.params.sigma); }},
      {"dt", [](RunConfig& c, S k, S v) { c.params.dt = to_double(k, v); },
       [](const RunConfig& c) { return dbl(c.params.dt); }},
      {"alpha", [](RunConfig& c, S k, S v) { c.params.alpha = to_double(k, v, true); },
       [](const RunConfig& c) { return dbl(c.params.alpha); }},
      {"n-agents", [](RunConfig& c, S k, S v) { c.agent_counts = to_list<std::size_t>(k, v, to_size); },
       [](const RunConfig& c) { return join(c.agent_counts, num); }},
      {"batch-size", [](RunConfig& c, S k, S v) { c.batch_sizes = to_list<std::size_t>(k, v, to_size); },
       [](const RunConfig& c) { return join(c.batch_sizes, num); }},
      {"batch-mode",
       [](RunConfig& c, S k, S v) {
         if (v == "full") c.params.batch_mode = BatchMode::full;
         else if (v == "random") c.params.batch_mode = BatchMode::random_subset;
         else if (v == "partition") c.params.batch_mode = BatchMode::disjoint_partition;
         else bad(k, "expected full, random or partition");
       },
       [](const RunConfig& c) { return batch_mode_name(c.params.batch_mode); }},
      {"mu", [](RunConfig& c, S k, S v) { c.params.mu = to_double(k, v); },
       [](const RunConfig& c) { return dbl(c.params.mu); }},
      {"n-min", [](RunConfig& c, S k, S v) { c.params.n_min = to_size(k, v); },
       [](const RunConfig& c) { return num(c.params.n_min); }},
      {"max-iter", [](RunConfig& c, S k, S v) { c.params.max_iter = to_size(k, v); },
       [](const RunConfig& c) { return num(c.params.max_iter); }},
      {"n-stall", [](RunConfig& c, S k, S v) { c.params.n_stall = to_size(k, v); },
       [](const RunConfig& c) { return num(c.params.n_stall); }},
      {"delta-stall", [](RunConfig& c, S k, S v) { c.params.delta_stall = to_double(k, v); },
       [](const RunConfig& c) { return dbl(c.params.delta_stall); }},
      {"noise",
       [](RunConfig& c, S k, S v) {
         c.noise_modes = to_list<NoiseMode>(k, v, [](S key, S item) {
           try {
             return parse_noise_mode(item);
           } catch (const InvalidParameter& e) {
             bad(key, e.what());
           }
         });
       },
       [](const RunConfig& c) { return join(c.noise_modes, [](NoiseMode m) { return std::string(to_string(m)); }); }},
      {"discard-period", [](RunConfig& c, S k, S v) { c.params.discard_period = to_size(k, v); },
       [](const RunConfig& c) { return num(c.params.discard_period); }},
      {"seed", [](RunConfig& c, S k, S v) { c.params.seed = to_u64(k, v); },
       [](const RunConfig& c) { return num(c.params.seed); }},
      {"threads",
       [](RunConfig& c, S k, S v) {
         const auto t = to_size(k, v);
         if (t < 1 || t > 1024) bad(k, "must lie in [1, 1024]");
         c.params.threads = static_cast<unsigned>(t);
       },
       [](const RunConfig& c) { return num(c.params.threads); }},
      {"function", [](RunConfig& c, S k, S v) { c.functions = to_list<std::string>(k, v, [](S, S item) { return item; }); },
       [](const RunConfig& c) { return join(c.functions, [](const std::string& s) { return s; }); }},
      {"dim",
       [](RunConfig& c, S k, S v) { c.dim = static_cast<Eigen::Index>(to_size(k, v)); },
       [](const RunConfig& c) { return num(static_cast<std::uint64_t>(c.dim)); }},
      {"rotation", [](RunConfig& c, S k, S v) { c.rotation = to_double(k, v); },
       [](const RunConfig& c) { return dbl(c.rotation); }},
      {"init",
       [](RunConfig& c, S k, S v) {
         if (v == "uniform") c.vmf_kappa.reset();
         else if (v == "vmf") c.vmf_kappa = c.vmf_kappa.value_or(0.0);
         else bad(k, "expected uniform or vmf");
       },
       [](const RunConfig& c) { return std::string(c.vmf_kappa ? "vmf" : "uniform"); }},
      {"kappa",
       [](RunConfig& c, S k, S v) { c.vmf_kappa = to_double(k, v); },
       [](const RunConfig& c) -> std::optional<std::string> {
         if (!c.vmf_kappa) return std::nullopt;
         return dbl(*c.vmf_kappa);
       }},
      {"xsy-noise",
       [](RunConfig& c, S k, S v) {
         if (v == "redraw") c.xsy_noise = XsyNoise::redraw;
         else if (v == "frozen") c.xsy_noise = XsyNoise::frozen;
         else bad(k, "expected redraw or frozen");
       },
       [](const RunConfig& c) { return std::string(c.xsy_noise == XsyNoise::redraw ? "redraw" : "frozen"); }},
      {"runs", [](RunConfig& c, S k, S v) { c.runs = to_size(k, v); },
       [](const RunConfig& c) { return num(c.runs); }},
      {"outlier-fractions",
       [](RunConfig& c, S k, S v) {
         c.outlier_fractions = to_list<double>(k, v, [](S key, S item) { return to_double(key, item); });
       },
       [](const RunConfig& c) { return join(c.outlier_fractions, dbl); }},
      {"p", [](RunConfig& c, S k, S v) { c.p = to_double(k, v); }, [](const RunConfig& c) { return dbl(c.p); }},
      {"points", [](RunConfig& c, S k, S v) { c.points = to_size(k, v); },
       [](const RunConfig& c) { return num(c.points); }},
      {"tolerance", [](RunConfig& c, S k, S v) { c.pca_tolerance = to_double(k, v); },
       [](const RunConfig& c) { return dbl(c.pca_tolerance); }},
      {"cloud", [](RunConfig& c, S, S v) { c.cloud_path = v; },
       [](const RunConfig& c) -> std::optional<std::string> {
         if (c.cloud_path.empty()) return std::nullopt;
         return c.cloud_path;
       }},
      {"frame-sizes", [](RunConfig& c, S k, S v) { c.frame_sizes = to_list<std::size_t>(k, v, to_size); },
       [](const RunConfig& c) { return join(c.frame_sizes, num); }},
      {"gradient", [](RunConfig& c, S k, S v) { c.gradient = to_bool(k, v); },
       [](const RunConfig& c) { return std::string(c.gradient ? "true" : "false"); }},
      {"ell", [](RunConfig& c, S k, S v) { c.gkv.ell = to_size(k, v); },
       [](const RunConfig& c) { return num(c.gkv.ell); }},
      {"armijo-c", [](RunConfig& c, S k, S v) { c.gkv.c_armijo = to_double(k, v); },
       [](const RunConfig& c) { return dbl(c.gkv.c_armijo); }},
      {"backtrack-tau", [](RunConfig& c, S k, S v) { c.gkv.tau_backtrack = to_double(k, v); },
       [](const RunConfig& c) { return dbl(c.gkv.tau_backtrack); }},
      {"h0", [](RunConfig& c, S k, S v) { c.gkv.h0 = to_double(k, v); },
       [](const RunConfig& c) { return dbl(c.gkv.h0); }},
      {"max-backtracks", [](RunConfig& c, S k, S v) { c.gkv.max_backtracks = to_size(k, v); },
       [](const RunConfig& c) { return num(c.gkv.max_backtracks); }},
      {"gradient-source",
       [](RunConfig& c, S k, S v) {
         if (v == "analytic") c.gkv.source = GradientSource::analytic;
         else if (v == "fd") c.gkv.source = GradientSource::finite_difference;
         else bad(k, "expected analytic or fd");
       },
       [](const RunConfig& c) {
         return std::string(c.gkv.source == GradientSource::analytic ? "analytic" : "fd");
       }},
      {"fd-step", [](RunConfig& c, S k, S v) { c.gkv.h_fd = to_double(k, v); },
       [](const RunConfig& c) { return dbl(c.gkv.h_fd); }},
      {"csv", [](RunConfig& c, S, S v) { c.csv_path = v; },
       [](const RunConfig& c) -> std::optional<std::string> {
         if (c.csv_path.empty()) return std::nullopt;
         return c.csv_path;
       }},
      {"json", [](RunConfig& c, S, S v) { c.json_path = v; },
       [](const RunConfig& c) -> std::optional<std::string> {
         if (c.json_path.empty()) return std::nullopt;
         return c.json_path;
       }},
  };
  return table;
}

}  // namespace

std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::single_run: return "single-run";
    case ExperimentKind::benchmark_sweep: return "benchmark-sweep";
    case ExperimentKind::robust_pca: return "robust-pca";
    case ExperimentKind::phase_retrieval: return "phase-retrieval";
    case ExperimentKind::property_suite: return "property-suite";
  }
  return "single-run";
}

ExperimentKind parse_experiment_kind(std::string_view s) {
  for (auto k : {ExperimentKind::single_run, ExperimentKind::benchmark_sweep, ExperimentKind::robust_pca,
                 ExperimentKind::phase_retrieval, ExperimentKind::property_suite}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown experiment kind '" + std::string(s) + "'");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& def : key_table()) out.push_back(def.name);
    return out;
  }();
  return keys;
}

ConfigMap read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  ConfigMap out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[' && t.back() == ']') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out[canonical_key(trim(std::string_view(t).substr(0, eq)))] = value;
  }
  return out;
}

void validate(const RunConfig& c) {
  auto fail = [](const std::string& key, const std::string& why) { bad(key, why); };
  if (c.dim < 2) fail("dim", "must be >= 2");
  if (c.runs < 1) fail("runs", "must be >= 1");
  if (c.functions.empty()) fail("function", "empty list");
  if (c.noise_modes.empty()) fail("noise", "empty list");
  if (c.agent_counts.empty()) fail("n-agents", "empty list");
  if (c.batch_sizes.size() != 1 && c.batch_sizes.size() != c.agent_counts.size()) {
    fail("batch-size", "needs one entry or one per n-agents entry");
  }
  if (!(c.rotation >= 0.0 && c.rotation <= std::numbers::pi)) fail("rotation", "must lie in [0, pi]");
  if (c.vmf_kappa && !(*c.vmf_kappa >= 0.0)) fail("kappa", "must be >= 0");
  if (!(c.p > 0.0 && c.p <= 2.0)) fail("p", "must satisfy 0 < p <= 2");
  if (c.points < 2) fail("points", "must be >= 2");
  if (!(c.pca_tolerance > 0.0)) fail("tolerance", "must be > 0");
  for (double f : c.outlier_fractions)
    if (!(f >= 0.0 && f < 1.0)) fail("outlier-fractions", "entries must lie in [0, 1)");
  for (std::size_t m : c.frame_sizes)
    if (m < 1) fail("frame-sizes", "entries must be >= 1");
  if (c.frame_sizes.empty()) fail("frame-sizes", "empty list");
  if (!c.cloud_path.empty() && !std::filesystem::exists(c.cloud_path)) {
    fail("cloud", "file '" + c.cloud_path + "' does not exist");
  }

  for (const auto& f : c.functions) {
    if (is_special_objective(f)) {
      if (c.kind != ExperimentKind::single_run) fail("function", "'" + f + "' is only valid for single runs");
      continue;
    }
    try {
      parse_test_function(f);
    } catch (const InvalidParameter& e) {
      fail("function", e.what());
    }
  }
  if (c.gradient && c.kind != ExperimentKind::single_run && c.kind != ExperimentKind::robust_pca) {
    fail("gradient", "gradient injection is available for single-run and robust-pca only");
  }
  if (c.kind == ExperimentKind::single_run) {
    if (c.functions.size() != 1) fail("function", "single runs take exactly one function");
    if (c.noise_modes.size() != 1) fail("noise", "single runs take exactly one noise mode");
    if (c.agent_counts.size() != 1) fail("n-agents", "single runs take exactly one agent count");
  }

  for (std::size_t i = 0; i < c.agent_counts.size(); ++i) {
    for (NoiseMode m : c.noise_modes) {
      const SolverParams sp = params_for(c, i, m);
      try {
        validate(sp);
      } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("invalid solver parameters: ") + e.what());
      }
    }
  }
  try {
    validate(c.gkv);
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("invalid gradient parameters: ") + e.what());
  }
}

SolverParams params_for(const RunConfig& c, std::size_t agents_index, NoiseMode noise) {
  SolverParams p = c.params;
  p.n_agents = c.agent_counts.at(agents_index);
  p.batch_size = c.batch_sizes.size() == 1 ? c.batch_sizes.front() : c.batch_sizes.at(agents_index);
  p.noise = noise;
  return p;
}

RunConfig apply_config(const ConfigMap& values, ExperimentKind kind) {
  RunConfig c;
  c.kind = kind;
  for (const auto& [raw_key, _] : values) {
    const std::string key = canonical_key(raw_key);
    const bool known = std::any_of(key_table().begin(), key_table().end(),
                                   [&](const KeyDef& def) { return def.name == key; });
    if (!known) throw ConfigError("unknown config key '" + raw_key + "'");
  }
  const auto init = values.find("init");
  const bool has_kappa = values.contains("kappa");
  if (init != values.end() && init->second == "uniform" && has_kappa) {
    throw ConfigError("config key 'kappa': only meaningful with init = vmf");
  }
  if (init != values.end() && init->second == "vmf" && !has_kappa) {
    throw ConfigError("config key 'init': vmf needs a concentration 'kappa'");
  }
  for (const auto& def : key_table()) {
    for (const auto& [raw_key, value] : values) {
      if (canonical_key(raw_key) == def.name) def.set(c, def.name, value);
    }
  }
  if (!values.contains("seed")) {
    if (const char* env = std::getenv("SPHERE_CBO_SEED"); env && *env) {
      c.params.seed = to_u64("SPHERE_CBO_SEED", env);
    }
  }
  c.params.n_agents = c.agent_counts.empty() ? 0 : c.agent_counts.front();
  c.params.batch_size = c.batch_sizes.empty() ? 0 : c.batch_sizes.front();
  c.params.noise = c.noise_modes.empty() ? NoiseMode::anisotropic : c.noise_modes.front();
  validate(c);
  return c;
}

RunConfig parse_config(const std::optional<std::filesystem::path>& file, const ConfigMap& overrides,
                       ExperimentKind kind) {
  ConfigMap merged;
  if (file) merged = read_config_file(*file);
  for (const auto& [k, v] : overrides) merged[canonical_key(k)] = v;
  return apply_config(merged, kind);
}

ConfigMap echo_config(const RunConfig& c) {
  ConfigMap out;
  for (const auto& def : key_table()) {
    if (auto v = def.get(c)) out[def.name] = *v;
  }
  return out;
}

}  // namespace sphere_cbo
