#pragma once

// Time-bin integration of a driven TLS in front of a mirror. Each step the
// TLS couples to the current bin with sqrt(gamma_l) and to the bin emitted
// k = tau/dt steps earlier with sqrt(gamma_r) e^{i phi}.

#include <cstddef>
#include <optional>
#include <vector>

#include "nmss/mps.hpp"
#include "nmss/qubit.hpp"
#include "nmss/tensors.hpp"

namespace nmss {

struct SystemParams {
  double omega = 0.0;
  double delta = 0.0;
  double phi = 0.0;
  double tau = 0.0;
  double gamma_l = 0.5;
  double gamma_r = 0.5;

  double gamma() const { return gamma_l + gamma_r; }
  void validate() const;
};

struct NumericsParams {
  double dt = 0.005;
  Eigen::Index d_bin = 3;
  Eigen::Index d_max = 32;
  double svd_cutoff = 1e-8;
  double t_max = 60.0;
  double ss_tol = 1e-3;
  /// Averaging window; 0 selects max(tau, 5 / gamma).
  double ss_window = 0.0;

  /// Largest admissible value of dt * max(gamma, omega).
  static constexpr double kMaxRateStep = 0.05;

  void validate(const SystemParams& sp) const;
  Truncation truncation() const { return {d_max, svd_cutoff}; }
};

/// k = tau / dt; throws when tau is not an integer multiple of dt.
std::size_t delay_steps(const SystemParams& sp, const NumericsParams& np);

/// Largest dt with dt * max(gamma, omega) <= `rate_step` that divides tau.
double auto_dt(const SystemParams& sp, double rate_step = NumericsParams::kMaxRateStep);

double resolved_window(const SystemParams& sp, const NumericsParams& np);

/// exp(G) on TLS (x) bin_now (x) bin_delayed with
/// G = -i H dt + sqrt(dt) (sqrt(gl) s- b_now^+ + sqrt(gr) e^{i phi} s- b_del^+ - h.c.).
ComplexMatrix step_unitary(const SystemParams& sp, const NumericsParams& np);

/// tau = 0 limit on TLS (x) bin_now: both emission paths address one bin.
ComplexMatrix markov_limit_unitary(const SystemParams& sp, const NumericsParams& np);

struct SimulateOptions {
  std::size_t record_stride = 1;
  QubitDensityMatrix initial_tls = QubitDensityMatrix::ground();
  /// Stop as soon as consecutive window averages agree to ss_tol.
  bool stop_at_convergence = true;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<QubitDensityMatrix> tls_states;
  /// Photon number of the bin leaving the loop at each recorded step.
  std::vector<double> out_bin_population;
  std::vector<double> norm_history;
  std::vector<Eigen::Index> max_bond_history;

  double cum_discarded = 0.0;
  double max_step_discarded = 0.0;
  bool converged = false;
  bool truncation_limited = false;
  std::size_t steps = 0;
  std::size_t delay_steps = 0;

  /// Averages over the last completed window.
  QubitDensityMatrix ss_state;
  double ss_out_population = 0.0;
  std::vector<BlochVector> window_averages;
};

/// Discarded weight per step above which a run is flagged as truncation limited.
inline constexpr double kTruncationFailureWeight = 1e-4;

Trajectory simulate(const SystemParams& sp, const NumericsParams& np, const SimulateOptions& opts = {});

struct SteadyStateResult {
  QubitDensityMatrix state;
  double out_population = 0.0;
  bool converged = false;
  bool truncation_limited = false;
  double cum_discarded = 0.0;
  double t_end = 0.0;
};

SteadyStateResult steady_state_nm(const SystemParams& sp, const NumericsParams& np,
                                  const QubitDensityMatrix& initial_tls = QubitDensityMatrix::ground());

struct EffectiveRate {
  double gamma_eff = 0.0;
  double rho_ee = 0.0;
  bool converged = false;
  bool truncation_limited = false;
};

/// Output-bin photon flux divided by the excited population.
EffectiveRate effective_decay_rate(const SystemParams& sp, const NumericsParams& np);
EffectiveRate effective_decay_rate(const SteadyStateResult& ss, const NumericsParams& np);

}  // namespace nmss
