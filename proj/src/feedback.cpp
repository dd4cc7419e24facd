#include "nmss/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace nmss {
namespace {

using Eigen::Index;

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

ComplexMatrix tls_lowering() {
  ComplexMatrix s = ComplexMatrix::Zero(2, 2);
  s(kGround, kExcited) = 1.0;
  return s;
}

ComplexMatrix tls_hamiltonian(const SystemParams& sp) {
  const ComplexMatrix sm = tls_lowering();
  ComplexMatrix h = 0.5 * sp.omega * (sm + sm.adjoint());
  h(kExcited, kExcited) += sp.delta;
  return h;
}

// Truncated bosonic raising operator on a bin.
ComplexMatrix bin_raising(Index d) {
  ComplexMatrix a = ComplexMatrix::Zero(d, d);
  for (Index n = 0; n + 1 < d; ++n) a(n + 1, n) = std::sqrt(static_cast<double>(n + 1));
  return a;
}

ComplexVector vacuum(Index d) {
  ComplexVector v = ComplexVector::Zero(d);
  v(0) = 1.0;
  return v;
}

// Reorders the legs of a gate given in the Kronecker convention: leg j of the
// result is leg order[j] of the input.
ComplexMatrix permute_gate(const ComplexMatrix& gate, const std::vector<Index>& dims, const std::vector<int>& order) {
  const int n = static_cast<int>(dims.size());
  std::vector<Index> tdims(dims);
  tdims.insert(tdims.end(), dims.begin(), dims.end());
  Tensor<Complex> t = Tensor<Complex>::from_matrix(gate);
  Tensor<Complex> legs(tdims, t.data());
  std::vector<int> full(order);
  for (int o : order) full.push_back(o + n);
  Tensor<Complex> permuted = legs.permuted(full);
  return Tensor<Complex>({gate.rows(), gate.cols()}, permuted.data()).to_matrix();
}

struct WindowAccumulator {
  Eigen::Vector3d bloch_sum = Eigen::Vector3d::Zero();
  double out_sum = 0.0;
  std::size_t count = 0;

  void add(const BlochVector& b, double out) {
    bloch_sum += b.vec();
    out_sum += out;
    ++count;
  }
  BlochVector bloch_average() const {
    const Eigen::Vector3d v = bloch_sum / static_cast<double>(count);
    return {v.x(), v.y(), v.z()};
  }
  double out_average() const { return out_sum / static_cast<double>(count); }
};

QubitDensityMatrix state_from_bloch_average(const BlochVector& b) {
  // Averages of valid states are valid; clip rounding overshoot of |r| <= 1.
  BlochVector c = b;
  const double r = c.norm();
  if (r > 1.0) {
    c.x /= r;
    c.y /= r;
    c.z /= r;
  }
  return QubitDensityMatrix::from_bloch(c);
}

// Gate builders also accept the fully decoupled gamma_l = gamma_r = 0 case.
void check_gate_params(const SystemParams& sp) {
  for (double v : {sp.omega, sp.delta, sp.phi, sp.tau, sp.gamma_l, sp.gamma_r})
    if (!std::isfinite(v)) throw InvalidInput("SystemParams: non-finite parameter");
  if (sp.gamma_l < 0.0 || sp.gamma_r < 0.0) throw InvalidInput("SystemParams: decay rates must be nonnegative");
}

}  // namespace

void SystemParams::validate() const {
  for (double v : {omega, delta, phi, tau, gamma_l, gamma_r})
    if (!std::isfinite(v)) throw InvalidInput("SystemParams: non-finite parameter");
  if (gamma_l < 0.0 || gamma_r < 0.0) throw InvalidInput("SystemParams: decay rates must be nonnegative");
  if (!(gamma_l + gamma_r > 0.0)) throw InvalidInput("SystemParams: gamma_l + gamma_r must be positive");
  if (tau < 0.0) throw InvalidInput("SystemParams: tau must be nonnegative");
}

void NumericsParams::validate(const SystemParams& sp) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("NumericsParams: dt must be positive");
  const double rate = std::max(sp.gamma(), std::abs(sp.omega));
  if (dt * rate > kMaxRateStep * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "NumericsParams: dt * max(gamma, omega) = " << dt * rate << " exceeds " << kMaxRateStep
        << "; use dt <= " << kMaxRateStep / rate;
    throw InvalidInput(msg.str());
  }
  if (d_bin < 2) throw InvalidInput("NumericsParams: d_bin must be >= 2");
  if (d_max < 1) throw InvalidInput("NumericsParams: d_max must be >= 1");
  if (!(svd_cutoff >= 0.0)) throw InvalidInput("NumericsParams: svd_cutoff must be >= 0");
  if (!(t_max > 0.0)) throw InvalidInput("NumericsParams: t_max must be positive");
  if (!(ss_tol > 0.0)) throw InvalidInput("NumericsParams: ss_tol must be positive");
  if (!(ss_window >= 0.0)) throw InvalidInput("NumericsParams: ss_window must be >= 0");
  delay_steps(sp, *this);
}

std::size_t delay_steps(const SystemParams& sp, const NumericsParams& np) {
  if (!(np.dt > 0.0)) throw InvalidInput("delay_steps: dt must be positive");
  const double ratio = sp.tau / np.dt;
  const double k = std::round(ratio);
  if (std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream msg;
    msg << "tau / dt = " << ratio << " is not an integer";
    if (k >= 1.0) msg << "; nearest admissible dt = " << sp.tau / k;
    throw InvalidInput(msg.str());
  }
  return static_cast<std::size_t>(k);
}

double auto_dt(const SystemParams& sp, double rate_step) {
  const double rate = std::max(sp.gamma(), std::abs(sp.omega));
  const double cap = rate_step / rate;
  if (sp.tau <= 0.0) return cap;
  const double n = std::ceil(sp.tau / cap - 1e-9);
  return sp.tau / n;
}

double resolved_window(const SystemParams& sp, const NumericsParams& np) {
  return np.ss_window > 0.0 ? np.ss_window : std::max(sp.tau, 5.0 / sp.gamma());
}

ComplexMatrix step_unitary(const SystemParams& sp, const NumericsParams& np) {
  check_gate_params(sp);
  if (np.d_bin < 2) throw InvalidInput("step_unitary: d_bin must be >= 2");
  if (!(np.dt > 0.0)) throw InvalidInput("step_unitary: dt must be positive");
  const Index d = np.d_bin;
  const ComplexMatrix id_bin = ComplexMatrix::Identity(d, d);
  const ComplexMatrix sm = tls_lowering();
  const ComplexMatrix up = bin_raising(d);
  const Complex i_unit(0.0, 1.0);

  const ComplexMatrix emit = std::sqrt(sp.gamma_l) * kron(kron(sm, up), id_bin) +
                             std::sqrt(sp.gamma_r) * std::exp(i_unit * sp.phi) * kron(kron(sm, id_bin), up);
  const ComplexMatrix g = -i_unit * np.dt * kron(kron(tls_hamiltonian(sp), id_bin), id_bin) +
                          std::sqrt(np.dt) * (emit - emit.adjoint());
  return expm_antihermitian(g);
}

ComplexMatrix markov_limit_unitary(const SystemParams& sp, const NumericsParams& np) {
  check_gate_params(sp);
  if (sp.tau != 0.0) throw InvalidInput("markov_limit_unitary: requires tau = 0");
  if (np.d_bin < 2) throw InvalidInput("markov_limit_unitary: d_bin must be >= 2");
  if (!(np.dt > 0.0)) throw InvalidInput("markov_limit_unitary: dt must be positive");
  const Index d = np.d_bin;
  const Complex i_unit(0.0, 1.0);
  const Complex amplitude = std::sqrt(sp.gamma_l) + std::sqrt(sp.gamma_r) * std::exp(i_unit * sp.phi);
  const ComplexMatrix emit = amplitude * kron(tls_lowering(), bin_raising(d));
  const ComplexMatrix g = -i_unit * np.dt * kron(tls_hamiltonian(sp), ComplexMatrix::Identity(d, d)) +
                          std::sqrt(np.dt) * (emit - emit.adjoint());
  return expm_antihermitian(g);
}

Trajectory simulate(const SystemParams& sp, const NumericsParams& np, const SimulateOptions& opts) {
  sp.validate();
  np.validate(sp);
  if (opts.record_stride < 1) throw InvalidInput("simulate: record_stride must be >= 1");
  if (!opts.initial_tls.is_pure()) throw InvalidInput("simulate: initial TLS state must be pure");

  const std::size_t k = delay_steps(sp, np);
  const Truncation trunc = np.truncation();
  const Index d = np.d_bin;
  const ComplexVector vac = vacuum(d);
  const auto n_steps = static_cast<std::size_t>(std::ceil(np.t_max / np.dt - 1e-9));
  const auto window_steps =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(resolved_window(sp, np) / np.dt)));

  // Chain layout at the start of step n (k >= 1):
  //   [b_{n-k}, b_{n-k+1}, ..., b_{n-1}, TLS | retired outputs]
  // The delayed bin b_{n-k} is swapped up to the TLS, the fresh bin b_n is
  // inserted between them, and the gate writes the sites back as
  // (b_n, TLS, b_{n-k}) so the finished bin leaves through the right edge.
  std::vector<ComplexVector> locals(k, vac);
  locals.emplace_back(opts.initial_tls.state_vector());
  std::vector<long> labels;
  for (std::size_t i = 0; i < k; ++i) labels.push_back(static_cast<long>(i) - static_cast<long>(k));
  labels.push_back(MpsState::kSystemLabel);
  MpsState state = MpsState::product(locals, k, labels);

  ComplexMatrix gate;
  if (k == 0) {
    gate = markov_limit_unitary(sp, np);
  } else {
    // step_unitary acts on (TLS, now, delayed); the chain holds (delayed, now, TLS).
    gate = permute_gate(step_unitary(sp, np), {2, d, d}, {2, 1, 0});
  }

  Trajectory traj;
  traj.delay_steps = k;
  WindowAccumulator window;
  std::optional<BlochVector> previous_window;
  std::optional<WindowAccumulator> last_complete;

  for (std::size_t n = 0; n < n_steps; ++n) {
    double discarded = 0.0;
    double out_population = 0.0;
    if (k == 0) {
      state.insert_product_site(1, vac, static_cast<long>(n));
      discarded += state.apply_gate_adjacent(0, gate, trunc, CenterSide::Left);
      out_population = state.site_number_expectation(1);
      state.retire_right_edge();
    } else {
      state.move_center(0);
      for (std::size_t i = 0; i + 1 < k; ++i) discarded += state.swap_adjacent(i, trunc, CenterSide::Right);
      state.insert_product_site(k, vac, static_cast<long>(n));
      discarded += state.apply_three_site_gate(k - 1, gate, trunc, {1, 2, 0}, 1);
      out_population = state.site_number_expectation(k + 1);
      state.retire_right_edge();
    }

    traj.max_step_discarded = std::max(traj.max_step_discarded, discarded);
    if (discarded > kTruncationFailureWeight) traj.truncation_limited = true;

    const QubitDensityMatrix rho = state.system_state();
    const double t = static_cast<double>(n + 1) * np.dt;
    traj.steps = n + 1;
    if ((n + 1) % opts.record_stride == 0) {
      traj.times.push_back(t);
      traj.tls_states.push_back(rho);
      traj.out_bin_population.push_back(out_population);
      traj.norm_history.push_back(state.norm());
      traj.max_bond_history.push_back(state.max_bond_dimension());
    }

    window.add(rho.bloch(), out_population);
    if (window.count == window_steps) {
      const BlochVector avg = window.bloch_average();
      traj.window_averages.push_back(avg);
      bool settled = false;
      if (previous_window) settled = (avg.vec() - previous_window->vec()).cwiseAbs().maxCoeff() < np.ss_tol;
      previous_window = avg;
      last_complete = window;
      window = WindowAccumulator{};
      if (settled) {
        traj.converged = true;
        if (opts.stop_at_convergence) break;
      } else {
        traj.converged = false;
      }
    }
  }

  traj.cum_discarded = state.cum_discarded();
  const WindowAccumulator& final_window = last_complete ? *last_complete : window;
  if (final_window.count > 0) {
    traj.ss_state = state_from_bloch_average(final_window.bloch_average());
    traj.ss_out_population = final_window.out_average();
  } else {
    traj.ss_state = state.system_state();
  }
  return traj;
}

SteadyStateResult steady_state_nm(const SystemParams& sp, const NumericsParams& np,
                                  const QubitDensityMatrix& initial_tls) {
  SimulateOptions opts;
  opts.record_stride = 1000;
  opts.initial_tls = initial_tls;
  const Trajectory traj = simulate(sp, np, opts);
  SteadyStateResult out;
  out.state = traj.ss_state;
  out.out_population = traj.ss_out_population;
  out.converged = traj.converged;
  out.truncation_limited = traj.truncation_limited;
  out.cum_discarded = traj.cum_discarded;
  out.t_end = static_cast<double>(traj.steps) * np.dt;
  return out;
}

EffectiveRate effective_decay_rate(const SteadyStateResult& ss, const NumericsParams& np) {
  const double rho_ee = ss.state.rho_ee();
  if (!(rho_ee > 1e-6)) throw DegenerateProblem("effective_decay_rate: excited population too small");
  return {ss.out_population / (np.dt * rho_ee), rho_ee, ss.converged, ss.truncation_limited};
}

EffectiveRate effective_decay_rate(const SystemParams& sp, const NumericsParams& np) {
  if (sp.omega == 0.0) throw DegenerateProblem("effective_decay_rate: undefined for an undriven TLS");
  return effective_decay_rate(steady_state_nm(sp, np), np);
}

}  // namespace nmss
