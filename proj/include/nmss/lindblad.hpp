#pragma once

// Markovian reference dynamics of the driven TLS:
//
//   d rho/dt = -i[H, rho] + (gamma/2)(2 s- rho s+ - {s+ s-, rho})
//              + gamma_phi (2 P rho P - {P, rho}),   P = s+ s- = |e><e|,
//   H = delta P + (omega/2)(s+ + s-).
//
// With this form coherences decay at gamma/2 + gamma_phi.

#include <vector>

#include <Eigen/Dense>

#include "nmss/qubit.hpp"

namespace nmss {

struct MarkovParams {
  double gamma = 1.0;
  double gamma_phi = 0.0;
  double omega = 0.0;
  double delta = 0.0;

  /// Mirror-renormalized decay rate gamma = 2 gamma' cos(phi).
  static MarkovParams with_mirror(double bare_gamma, double phi, double omega, double gamma_phi = 0.0,
                                  double delta = 0.0);
};

/// Right-hand side of the master equation.
Eigen::Matrix2cd lindblad_rhs(const MarkovParams& p, const Eigen::Matrix2cd& rho);

/// 4x4 superoperator acting on the column-major vectorization of rho.
Eigen::Matrix4cd liouvillian(const MarkovParams& p);

/// Unique stationary state, from the null vector of the Liouvillian.
/// Requires gamma > 0 and gamma + 2 gamma_phi > 0.
QubitDensityMatrix steady_state(const MarkovParams& p);

/// Same state from the 3x3 Bloch equations; cheap enough for optimizer loops.
BlochVector bloch_steady_state(const MarkovParams& p);

struct EvolveOptions {
  /// Largest RK4 substep; 0 selects 0.01 / (largest rate).
  double max_step = 0.0;
};

/// Fixed-step RK4 integration, returning the state at each grid time
/// (the first entry is rho0 propagated to times.front() - which is rho0
/// itself when the grid starts at the initial time).
std::vector<Eigen::Matrix2cd> evolve(const MarkovParams& p, const Eigen::Matrix2cd& rho0, const std::vector<double>& times,
                                     const EvolveOptions& opts = {});

/// Convenience overload for physical trajectories.
std::vector<QubitDensityMatrix> evolve_states(const MarkovParams& p, const QubitDensityMatrix& rho0,
                                              const std::vector<double>& times, const EvolveOptions& opts = {});

struct BoundaryPoint {
  double omega = 0.0;
  QubitDensityMatrix state;
};

/// gamma_phi = 0 steady states along a drive grid: the outer edge of the
/// Markovian steady-state region.
std::vector<BoundaryPoint> markov_boundary(const std::vector<double>& omega_grid, double gamma);

}  // namespace nmss
