#include "nmss/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "nmss/nelder_mead.hpp"

namespace nmss {

double trace_distance(const QubitDensityMatrix& a, const QubitDensityMatrix& b) {
  const Eigen::Matrix2cd d = a.matrix() - b.matrix();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(d, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

namespace {

// gamma_phi = floor * (e^w - 1): zero at w = 0, logarithmic for large w.
struct DephasingAxis {
  double floor;
  double to_rate(double w) const { return floor * std::expm1(w); }
  double from_rate(double g) const { return std::log1p(g / floor); }
};

}  // namespace

NssResult nss(const QubitDensityMatrix& rho, double omega, const NssOptions& opts) {
  if (!(omega > 0.0) || !std::isfinite(omega)) throw InvalidInput("nss: omega must be positive");
  if (opts.gamma_points < 2 || opts.gamma_phi_points < 2) throw InvalidInput("nss: grid needs >= 2 points per axis");
  if (!(opts.gamma_min_ratio > 0.0 && opts.gamma_max_ratio > opts.gamma_min_ratio && opts.gamma_phi_max_ratio > 0.0))
    throw InvalidInput("nss: bad search box");

  const Eigen::Vector3d target = rho.bloch().vec();
  const double u_lo = std::log(opts.gamma_min_ratio * omega);
  const double u_hi = std::log(opts.gamma_max_ratio * omega);
  const DephasingAxis axis{opts.gamma_min_ratio * omega};
  const double w_hi = axis.from_rate(opts.gamma_phi_max_ratio * omega);

  int evals = 0;
  auto distance = [&](double u, double w) {
    ++evals;
    const MarkovParams p{std::exp(u), axis.to_rate(w), omega, opts.detuning};
    return 0.5 * (bloch_steady_state(p).vec() - target).norm();
  };

  double best = std::numeric_limits<double>::infinity();
  double best_u = u_lo, best_w = 0.0;
  const double du = (u_hi - u_lo) / (opts.gamma_points - 1);
  const double dw = w_hi / (opts.gamma_phi_points - 1);
  for (int i = 0; i < opts.gamma_points; ++i) {
    const double u = u_lo + du * i;
    for (int j = 0; j < opts.gamma_phi_points; ++j) {
      const double w = dw * j;
      const double f = distance(u, w);
      if (f < best) {
        best = f;
        best_u = u;
        best_w = w;
      }
    }
  }

  // The simplex runs unconstrained; the box is enforced by projection.
  auto project = [&](const Eigen::VectorXd& x) {
    return Eigen::Vector2d(std::clamp(x(0), u_lo, u_hi), std::clamp(x(1), 0.0, w_hi));
  };
  NelderMeadOptions nm;
  nm.step = Eigen::Vector2d(du, dw);
  nm.f_tol = 1e-12;
  nm.x_tol = 1e-9;
  nm.max_evals = 4000;
  const NelderMeadResult refined = nelder_mead(
      [&](const Eigen::VectorXd& x) {
        const Eigen::Vector2d y = project(x);
        return distance(y(0), y(1));
      },
      Eigen::Vector2d(best_u, best_w), nm);

  Eigen::Vector2d x_best(best_u, best_w);
  if (refined.f < best) {
    best = refined.f;
    x_best = project(refined.x);
  }

  NssResult out;
  out.raw_value = best;
  out.value = best < opts.clamp ? 0.0 : best;
  out.argmin_gamma = std::exp(x_best(0));
  out.argmin_gamma_phi = axis.to_rate(x_best(1));
  out.argmin_state =
      QubitDensityMatrix::from_bloch(bloch_steady_state({out.argmin_gamma, out.argmin_gamma_phi, omega, opts.detuning}));
  out.optimizer_evals = evals;
  const double edge = 1e-6;
  out.hit_gamma_bound = x_best(0) <= u_lo + edge || x_best(0) >= u_hi - edge;
  out.hit_gamma_phi_bound = x_best(1) <= edge || x_best(1) >= w_hi - edge;
  return out;
}

BlpResult blp(const SystemParams& sp, const NumericsParams& np, std::size_t stride) {
  if (stride < 1) throw InvalidInput("blp: stride must be >= 1");
  SimulateOptions opts;
  opts.record_stride = stride;
  opts.stop_at_convergence = false;
  opts.initial_tls = QubitDensityMatrix::ground();
  const Trajectory from_g = simulate(sp, np, opts);
  opts.initial_tls = QubitDensityMatrix::excited();
  const Trajectory from_e = simulate(sp, np, opts);

  BlpResult out;
  out.truncation_limited = from_g.truncation_limited || from_e.truncation_limited;
  out.times.push_back(0.0);
  out.trace_distance_series.push_back(1.0);
  for (std::size_t i = 0; i < from_g.times.size(); ++i) {
    out.times.push_back(from_g.times[i]);
    out.trace_distance_series.push_back(trace_distance(from_g.tls_states[i], from_e.tls_states[i]));
  }

  const auto& t = out.times;
  const auto& d = out.trace_distance_series;
  bool open = false;
  for (std::size_t i = 1; i < d.size(); ++i) {
    const double inc = d[i] - d[i - 1];
    if (inc > 0.0) {
      out.value += inc;
      if (!open) out.positive_segments.emplace_back(t[i - 1], t[i]);
      out.positive_segments.back().second = t[i];
      open = true;
    } else {
      open = false;
    }
  }
  if (d.size() >= 2) {
    const std::size_t n = d.size();
    const double slope = (d[n - 1] - d[n - 2]) / (t[n - 1] - t[n - 2]);
    out.tail_converged = std::abs(slope) <= np.ss_tol;
  }
  return out;
}

MarkovParams fit_effective_rates(const QubitDensityMatrix& rho, double omega) {
  if (!(omega > 0.0) || !std::isfinite(omega)) throw InvalidInput("fit_effective_rates: omega must be positive");
  const BlochVector b = rho.bloch();
  if (std::abs(b.x) > 1e-3) throw InvalidInput("fit_effective_rates: needs a resonant state with Bloch x = 0");
  if (std::abs(b.y) < 1e-12) throw DegenerateProblem("fit_effective_rates: Bloch y = 0, relations not invertible");
  if (1.0 + b.z < 1e-12) throw DegenerateProblem("fit_effective_rates: ground state, relations not invertible");
  const double gamma = omega * b.y / (1.0 + b.z);
  if (!(gamma > 0.0)) throw DegenerateProblem("fit_effective_rates: fitted gamma is not positive");
  const double gamma2 = -omega * b.z / b.y;
  return {gamma, gamma2 - 0.5 * gamma, omega, 0.0};
}

}  // namespace nmss
