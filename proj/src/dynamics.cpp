#include "sphere_cbo/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "sphere_cbo/errors.hpp"

namespace sphere_cbo {

namespace {

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count < 2) {
    fn(std::size_t{0}, count);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, count);
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::jthread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        fn(w * chunk, std::min(count, (w + 1) * chunk));
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

void require(bool ok, const char* what) {
  if (!ok) throw InvalidParameter(what);
}

}  // namespace

std::string_view to_string(NoiseMode m) { return m == NoiseMode::anisotropic ? "aniso" : "iso"; }

NoiseMode parse_noise_mode(std::string_view s) {
  if (s == "aniso" || s == "anisotropic") return NoiseMode::anisotropic;
  if (s == "iso" || s == "isotropic") return NoiseMode::isotropic;
  throw InvalidParameter("noise must be 'aniso' or 'iso', got '" + std::string(s) + "'");
}

std::string_view to_string(StopReason r) { return r == StopReason::stall ? "stall" : "max-iter"; }

void validate(const SolverParams& p) {
  require(p.lambda > 0.0 && std::isfinite(p.lambda), "lambda must be > 0");
  require(p.sigma >= 0.0 && std::isfinite(p.sigma), "sigma must be >= 0");
  require(p.dt > 0.0 && std::isfinite(p.dt), "dt must be > 0");
  require(p.alpha >= 0.0, "alpha must be >= 0 (or inf)");
  require(p.n_agents >= 1, "n-agents must be >= 1");
  require(p.mu >= 0.0 && p.mu <= 1.0, "mu must lie in [0, 1]");
  require(p.n_min >= 1 && p.n_min <= p.n_agents, "n-min must satisfy 1 <= n-min <= n-agents");
  require(p.batch_size >= 1 && p.batch_size <= p.n_agents, "batch-size must satisfy 1 <= batch-size <= n-agents");
  require(p.n_stall >= 1, "n-stall must be >= 1");
  require(p.delta_stall > 0.0, "delta-stall must be > 0");
  require(p.discard_period >= 1, "discard-period must be >= 1");
  require(p.threads >= 1, "threads must be >= 1");
}

AgentIncrement anisotropic_increment(const Eigen::Ref<const Vector>& v, const Eigen::Ref<const Vector>& consensus,
                                     const StepCoefficients& c, const Eigen::Ref<const Vector>& z) {
  const Vector f = v - consensus;
  const Eigen::ArrayXd fv = f.array() * v.array();
  AgentIncrement inc;
  inc.drift = (c.dt * c.lambda) * project_tangent_raw(v, consensus);
  const Vector raw_noise = (c.sigma * std::sqrt(c.dt)) * (f.array() * z.array()).matrix();
  inc.noise = project_tangent_raw(v, raw_noise);
  const double scalar = f.squaredNorm() - 2.0 * fv.square().sum();
  inc.correction = (-c.dt * 0.5 * c.sigma * c.sigma) * (scalar * v + (f.array() * fv).matrix());
  return inc;
}

AgentIncrement isotropic_increment(const Eigen::Ref<const Vector>& v, const Eigen::Ref<const Vector>& consensus,
                                   const StepCoefficients& c, const Eigen::Ref<const Vector>& z) {
  const Vector f = v - consensus;
  const double dist2 = f.squaredNorm();
  const double dm1 = static_cast<double>(v.size() - 1);
  AgentIncrement inc;
  inc.drift = (c.dt * c.lambda) * project_tangent_raw(v, consensus);
  inc.noise = (c.sigma * std::sqrt(dist2) * std::sqrt(c.dt)) * project_tangent_raw(v, z);
  inc.correction = (-c.dt * 0.5 * c.sigma * c.sigma * dist2 * dm1) * v;
  return inc;
}

void step_ensemble(Ensemble& e, NoiseMode mode, const ConsensusField& consensus, const StepCoefficients& c,
                   const AgentMatrix& unit_normals, unsigned threads) {
  AgentMatrix& a = e.mutable_agents();
  if (unit_normals.rows() != a.rows() || unit_normals.cols() != a.cols()) {
    throw InvalidInput("step: normal draws do not match the ensemble shape");
  }
  if (consensus.points.empty()) throw InvalidInput("step: no consensus point");
  const bool per_agent = !consensus.assignment.empty();
  if (per_agent && consensus.assignment.size() != e.size()) throw InvalidInput("step: bad consensus assignment");

  parallel_for(e.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const Vector v = a.row(row).transpose();
      const Vector& target = consensus.points[per_agent ? consensus.assignment[i] : 0];
      const Vector z = unit_normals.row(row).transpose();
      const AgentIncrement inc = mode == NoiseMode::anisotropic ? anisotropic_increment(v, target, c, z)
                                                                : isotropic_increment(v, target, c, z);
      const Vector next = v + inc.drift + inc.noise + inc.correction;
      const double norm = next.norm();
      if (!(norm >= kDegenerateNorm)) {
        throw DegenerateVector("agent " + std::to_string(i) + " collapsed to norm " + std::to_string(norm));
      }
      a.row(row) = (next / norm).transpose();
    }
  });
}

AgentMatrix draw_unit_normals(std::size_t n, Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  AgentMatrix z(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index k = 0; k < d; ++k) z(i, k) = normal(rng);
  return z;
}

void step_anisotropic(Ensemble& e, const Vector& consensus, const StepCoefficients& c,
                      const AgentMatrix& unit_normals) {
  step_ensemble(e, NoiseMode::anisotropic, {std::span(&consensus, 1), {}}, c, unit_normals);
}

void step_anisotropic(Ensemble& e, const Vector& consensus, const StepCoefficients& c, Rng& rng) {
  step_anisotropic(e, consensus, c, draw_unit_normals(e.size(), e.dim(), rng));
}

void step_isotropic(Ensemble& e, const Vector& consensus, const StepCoefficients& c,
                    const AgentMatrix& unit_normals) {
  step_ensemble(e, NoiseMode::isotropic, {std::span(&consensus, 1), {}}, c, unit_normals);
}

void step_isotropic(Ensemble& e, const Vector& consensus, const StepCoefficients& c, Rng& rng) {
  step_isotropic(e, consensus, c, draw_unit_normals(e.size(), e.dim(), rng));
}

std::size_t discard_update(std::size_t n, double sigma_prev, double sigma_next, double mu, std::size_t n_min) {
  if (!(sigma_prev > 0.0) || sigma_next > sigma_prev) return n;
  const double target = static_cast<double>(n) * (1.0 + mu * ((sigma_next - sigma_prev) / sigma_prev));
  // the 1e-9 absorbs representation error in products that are integers in exact arithmetic
  const auto next = static_cast<std::size_t>(std::max(0.0, std::floor(target + 1e-9)));
  return std::clamp(next, std::min(n_min, n), n);
}

bool check_stall(std::span<const Vector> trace, double delta_stall, std::size_t n_stall) {
  if (trace.size() < n_stall + 1) return false;
  for (std::size_t k = trace.size() - n_stall; k < trace.size(); ++k) {
    if (!((trace[k] - trace[k - 1]).norm() < delta_stall)) return false;
  }
  return true;
}

bool StallMonitor::push(const Vector& point) {
  if (last_) quiet_ = (point - *last_).norm() < delta_ ? quiet_ + 1 : 0;
  last_ = point;
  return quiet_ >= window_;
}

double sup_error(const Vector& v, const Vector& target, bool fold_sign) {
  const double plus = (v - target).lpNorm<Eigen::Infinity>();
  if (!fold_sign) return plus;
  return std::min(plus, (v + target).lpNorm<Eigen::Infinity>());
}

namespace {

Ensemble initial_ensemble(const InitSpec& init, const SolverParams& p, Eigen::Index d, Rng& rng) {
  if (std::holds_alternative<UniformInit>(init)) return sample_uniform_ensemble(p.n_agents, d, rng);
  if (const auto* vmf = std::get_if<VmfInit>(&init)) {
    if (vmf->mean.dim() != d) throw InvalidInput("vMF mean dimension does not match the objective");
    return sample_vmf_ensemble(p.n_agents, vmf->mean.coords(), vmf->kappa, rng);
  }
  const auto& explicit_agents = std::get<Ensemble>(init);
  if (explicit_agents.dim() != d) throw InvalidInput("initial ensemble dimension does not match the objective");
  return explicit_agents;
}

}  // namespace

RunReport run(const Objective& obj, const SolverParams& p, const InitSpec& init, Rng& rng, const RunOptions& opts) {
  validate(p);
  if (opts.gradient) validate(*opts.gradient);
  const Eigen::Index d = obj.dim;
  if (d < 2) throw InvalidDimension("objective dimension must be >= 2");

  Ensemble e = initial_ensemble(init, p, d, rng);
  const std::size_t n_min = std::min(p.n_min, e.size());
  const StepCoefficients coeffs{p.lambda, p.sigma, p.dt};

  RunReport report;
  double sigma_prev = ensemble_stats(e).empirical_variance;
  StallMonitor monitor(p.delta_stall, p.n_stall);
  double agent_iterations = 0.0;

  std::vector<double> values;
  std::vector<Vector> points;
  std::vector<std::uint32_t> assignment;
  ConsensusPoint lead;

  for (std::size_t n = 0; n < p.max_iter; ++n) {
    try {
      if (opts.gradient && (n + 1) % opts.gradient->ell == 0) {
        report.objective_evals += gkv_inject(e, obj, *opts.gradient, n, rng).evaluations;
        ++report.gradient_steps;
      }

      const std::size_t active = e.size();
      agent_iterations += static_cast<double>(active);
      const BatchPlan plan = plan_batches(p.batch_mode, active, p.batch_size, rng);

      points.clear();
      assignment.clear();
      if (plan.indices.size() > 1) assignment.assign(active, 0);
      for (std::size_t b = 0; b < plan.indices.size(); ++b) {
        const auto& idx = plan.indices[b];
        values.resize(idx.size());
        parallel_for(idx.size(), p.threads, [&](std::size_t begin, std::size_t end) {
          for (std::size_t k = begin; k < end; ++k) {
            values[k] = obj(e.agent(idx[k]).transpose(), EvalKey{n, idx[k]});
          }
        });
        report.objective_evals += idx.size();
        ConsensusPoint cp = consensus_point(e, idx, values, p.alpha);
        if (b == 0) lead = cp;
        points.push_back(cp.point);
        if (!assignment.empty())
          for (std::size_t i : idx) assignment[i] = static_cast<std::uint32_t>(b);
      }
      Vector monitored = points.front();
      if (points.size() > 1) {
        for (std::size_t b = 1; b < points.size(); ++b) monitored += points[b];
        monitored /= static_cast<double>(points.size());
      }

      const AgentMatrix normals = draw_unit_normals(active, d, rng);
      step_ensemble(e, p.noise, ConsensusField{points, assignment}, coeffs, normals, p.threads);
      report.iterations = n + 1;

      if (opts.observer) opts.observer(IterationView{n, e, lead});
      if (opts.trace_every > 0 && n % opts.trace_every == 0) report.consensus_trace.push_back(monitored);

      if (monitor.push(monitored)) {
        report.stop_reason = StopReason::stall;
        break;
      }

      if (p.mu > 0.0 && (n + 1) % p.discard_period == 0) {
        const double sigma_next = ensemble_stats(e).empirical_variance;
        const std::size_t keep = discard_update(e.size(), sigma_prev, sigma_next, p.mu, n_min);
        if (keep < e.size()) {
          std::vector<std::size_t> rows = select_batch(e.size(), keep, rng);
          std::sort(rows.begin(), rows.end());
          e.keep_rows(rows);
        }
        sigma_prev = sigma_next;
      }
    } catch (const Error& err) {
      throw RunError(n, err.what());
    }
  }

  values.resize(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) values[i] = obj(e.agent(i).transpose(), EvalKey{report.iterations, i});
  report.objective_evals += e.size();
  report.final_consensus = consensus_point(e, values, p.alpha);
  report.final_agents = e.size();
  report.avg_agents = report.iterations > 0 ? agent_iterations / static_cast<double>(report.iterations)
                                            : static_cast<double>(e.size());
  if (obj.known_minimizer) {
    report.sup_error = sup_error(report.final_consensus.point, obj.known_minimizer->coords(), obj.even);
    report.success = *report.sup_error <= kSuccessTolerance;
  }
  return report;
}

}  // namespace sphere_cbo
