#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "sphere_cbo/consensus.hpp"
#include "sphere_cbo/gradient_kv.hpp"
#include "sphere_cbo/objectives.hpp"
#include "sphere_cbo/random.hpp"
#include "sphere_cbo/sphere.hpp"

namespace sphere_cbo {

enum class NoiseMode { anisotropic, isotropic };

std::string_view to_string(NoiseMode m);
/// "aniso"/"anisotropic" or "iso"/"isotropic".
NoiseMode parse_noise_mode(std::string_view s);

/// Scalar knobs of the fast KV-CBO loop. Defaults follow the anisotropic
/// d = 20 benchmark setting.
struct SolverParams {
  double lambda = 1.0;
  double sigma = 5.0;
  double dt = 0.0025;
  double alpha = 5e4;  ///< kAlphaInfinity selects the best agent
  std::size_t n_agents = 200;
  std::size_t batch_size = 120;
  BatchMode batch_mode = BatchMode::random_subset;
  double mu = 0.1;
  std::size_t n_min = 10;
  std::size_t max_iter = 20000;
  std::size_t n_stall = 250;
  double delta_stall = 1e-4;
  NoiseMode noise = NoiseMode::anisotropic;
  std::size_t discard_period = 10;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  bool operator==(const SolverParams&) const = default;
};

/// Throws InvalidParameter naming the first violated constraint.
void validate(const SolverParams& p);

struct StepCoefficients {
  double lambda = 1.0;
  double sigma = 0.0;
  double dt = 0.0;
};

/// The three pieces of one agent's Euler-Maruyama increment, before
/// renormalization: V~ = V + drift + noise + correction.
struct AgentIncrement {
  Vector drift;
  Vector noise;
  Vector correction;
};

/// Anisotropic increment with Delta B = sqrt(dt) z:
///   drift      = dt lambda P(V) v_a
///   noise      = sigma P(V) (F .* Delta B),              F = V - v_a
///   correction = -dt sigma^2/2 (|F|^2 V + F.^2 .* V - 2 |F .* V|^2 V)
AgentIncrement anisotropic_increment(const Eigen::Ref<const Vector>& v, const Eigen::Ref<const Vector>& consensus,
                                     const StepCoefficients& c, const Eigen::Ref<const Vector>& z);

/// Isotropic increment:
///   noise      = sigma |F| P(V) Delta B
///   correction = -dt sigma^2/2 |F|^2 (d - 1) V
AgentIncrement isotropic_increment(const Eigen::Ref<const Vector>& v, const Eigen::Ref<const Vector>& consensus,
                                   const StepCoefficients& c, const Eigen::Ref<const Vector>& z);

/// Per-agent consensus assignment for partitioned batches. An empty
/// `assignment` means every agent uses consensus[0].
struct ConsensusField {
  std::span<const Vector> points;
  std::span<const std::uint32_t> assignment;
};

/// Advances every agent one step in place. `unit_normals` holds one row of
/// standard normal draws per agent. Throws DegenerateVector naming the agent
/// if some V~ vanishes.
void step_ensemble(Ensemble& e, NoiseMode mode, const ConsensusField& consensus, const StepCoefficients& c,
                   const AgentMatrix& unit_normals, unsigned threads = 1);

void step_anisotropic(Ensemble& e, const Vector& consensus, const StepCoefficients& c,
                      const AgentMatrix& unit_normals);
void step_anisotropic(Ensemble& e, const Vector& consensus, const StepCoefficients& c, Rng& rng);
void step_isotropic(Ensemble& e, const Vector& consensus, const StepCoefficients& c,
                    const AgentMatrix& unit_normals);
void step_isotropic(Ensemble& e, const Vector& consensus, const StepCoefficients& c, Rng& rng);

/// n x d matrix of independent standard normals, drawn row by row.
AgentMatrix draw_unit_normals(std::size_t n, Eigen::Index d, Rng& rng);

/// New active count after a variance check:
///   floor(N (1 + mu (Sigma_next - Sigma_prev) / Sigma_prev)), clamped to [N_min, N].
/// Returns N unchanged when Sigma_prev == 0 or the variance grew.
std::size_t discard_update(std::size_t n, double sigma_prev, double sigma_next, double mu, std::size_t n_min);

/// True iff the last n_stall successive differences of `trace` are all
/// strictly below delta_stall. Needs n_stall + 1 entries.
bool check_stall(std::span<const Vector> trace, double delta_stall, std::size_t n_stall);

/// Incremental form of check_stall used by the run loop.
class StallMonitor {
 public:
  StallMonitor(double delta_stall, std::size_t n_stall) : delta_(delta_stall), window_(n_stall) {}
  /// Records the next consensus point; returns true once stalled.
  bool push(const Vector& point);

 private:
  double delta_;
  std::size_t window_;
  std::size_t quiet_ = 0;
  std::optional<Vector> last_;
};

enum class StopReason { stall, max_iter };
std::string_view to_string(StopReason r);

struct UniformInit {};
struct VmfInit {
  UnitVector mean;
  double kappa = 0.0;
};
using InitSpec = std::variant<UniformInit, VmfInit, Ensemble>;

/// What the observer sees after each iteration.
struct IterationView {
  std::size_t iteration;
  const Ensemble& ensemble;
  const ConsensusPoint& consensus;
};

struct RunOptions {
  std::optional<GkvParams> gradient;  ///< one injected gradient step at iterations ell, 2 ell, ... (1-based)
  std::size_t trace_every = 0;        ///< record every k-th consensus point (0 disables)
  std::function<void(const IterationView&)> observer;
};

struct RunReport {
  ConsensusPoint final_consensus;
  std::size_t iterations = 0;
  std::optional<bool> success;
  std::optional<double> sup_error;  ///< ||v_a - v*||_inf, sign-folded for even objectives
  double avg_agents = 0.0;
  std::size_t final_agents = 0;
  std::uint64_t objective_evals = 0;
  std::uint64_t gradient_steps = 0;
  StopReason stop_reason = StopReason::max_iter;
  std::vector<Vector> consensus_trace;
};

/// Success threshold on the sup-norm error.
inline constexpr double kSuccessTolerance = 0.05;

/// ||v - v*||_inf, or the smaller of the errors to +-v* when `fold_sign`.
double sup_error(const Vector& v, const Vector& target, bool fold_sign);

/// Fast KV-CBO loop: batch consensus, Euler-Maruyama step, variance-based
/// discarding every discard_period iterations, stall / max-iteration stop.
RunReport run(const Objective& obj, const SolverParams& p, const InitSpec& init, Rng& rng,
              const RunOptions& opts = {});

}  // namespace sphere_cbo
