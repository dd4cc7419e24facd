#pragma once

// Non-Markovianity quantifiers: the steady-state distance to the Markovian
// family, the BLP trace-distance backflow, and the effective-rate fit.

#include <cstddef>
#include <utility>
#include <vector>

#include "nmss/feedback.hpp"
#include "nmss/lindblad.hpp"
#include "nmss/qubit.hpp"

namespace nmss {

/// (1/2) Tr|a - b|; for qubits half the Bloch distance.
double trace_distance(const QubitDensityMatrix& a, const QubitDensityMatrix& b);

struct NssOptions {
  int gamma_points = 60;
  int gamma_phi_points = 40;
  /// Search box in units of omega.
  double gamma_min_ratio = 1e-3;
  double gamma_max_ratio = 1e3;
  double gamma_phi_max_ratio = 1e2;
  /// Values below this are reported as 0 (inside the Markovian region).
  double clamp = 1e-3;
  double detuning = 0.0;
};

struct NssResult {
  double value = 0.0;
  /// Distance to the optimum before clamping.
  double raw_value = 0.0;
  double argmin_gamma = 0.0;
  double argmin_gamma_phi = 0.0;
  QubitDensityMatrix argmin_state;
  int optimizer_evals = 0;
  bool hit_gamma_bound = false;
  bool hit_gamma_phi_bound = false;

  bool inside_markov_region() const { return value == 0.0; }
};

NssResult nss(const QubitDensityMatrix& rho, double omega, const NssOptions& opts = {});

struct BlpResult {
  double value = 0.0;
  std::vector<double> times;
  std::vector<double> trace_distance_series;
  /// [t_start, t_end] of each run of consecutive increasing samples.
  std::vector<std::pair<double, double>> positive_segments;
  /// |dT/dt| at t_max within ss_tol.
  bool tail_converged = false;
  bool truncation_limited = false;
};

/// Trace distance between the trajectories started in |g> and |e>, sampled
/// every `stride` steps. The drive stays on.
BlpResult blp(const SystemParams& sp, const NumericsParams& np, std::size_t stride = 1);

/// Inverts the resonant stationary Bloch relations for (gamma, gamma_phi);
/// gamma_phi may come out negative.
MarkovParams fit_effective_rates(const QubitDensityMatrix& rho, double omega);

}  // namespace nmss
