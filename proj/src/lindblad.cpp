#include "nmss/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

namespace nmss {
namespace {

Eigen::Matrix2cd lowering() {
  Eigen::Matrix2cd s = Eigen::Matrix2cd::Zero();
  s(kGround, kExcited) = 1.0;
  return s;
}

Eigen::Matrix2cd excited_projector() {
  Eigen::Matrix2cd p = Eigen::Matrix2cd::Zero();
  p(kExcited, kExcited) = 1.0;
  return p;
}

Eigen::Matrix2cd hamiltonian(const MarkovParams& p) {
  const Eigen::Matrix2cd sm = lowering();
  return p.delta * excited_projector() + 0.5 * p.omega * (sm + sm.adjoint());
}

// vec(A X B) = (B^T kron A) vec(X) for column-major vec.
Eigen::Matrix4cd kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  Eigen::Matrix4cd k;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) k.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return k;
}

Eigen::Matrix4cd dissipator(const Eigen::Matrix2cd& l) {
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  const Eigen::Matrix2cd ldl = l.adjoint() * l;
  return kron(l.conjugate(), l) - 0.5 * kron(id, ldl) - 0.5 * kron(ldl.transpose(), id);
}

double max_rate(const MarkovParams& p) {
  return std::max({std::abs(p.gamma), std::abs(p.gamma_phi), std::abs(p.omega), std::abs(p.delta), 1e-300});
}

void check_finite(const MarkovParams& p) {
  if (!std::isfinite(p.gamma) || !std::isfinite(p.gamma_phi) || !std::isfinite(p.omega) || !std::isfinite(p.delta))
    throw InvalidInput("MarkovParams: non-finite parameter");
}

}  // namespace

MarkovParams MarkovParams::with_mirror(double bare_gamma, double phi, double omega, double gamma_phi, double delta) {
  return {2.0 * bare_gamma * std::cos(phi), gamma_phi, omega, delta};
}

Eigen::Matrix2cd lindblad_rhs(const MarkovParams& p, const Eigen::Matrix2cd& rho) {
  const Complex i_unit(0.0, 1.0);
  const Eigen::Matrix2cd h = hamiltonian(p);
  const Eigen::Matrix2cd sm = lowering();
  const Eigen::Matrix2cd pe = excited_projector();
  Eigen::Matrix2cd out = -i_unit * (h * rho - rho * h);
  out += 0.5 * p.gamma * (2.0 * sm * rho * sm.adjoint() - pe * rho - rho * pe);
  out += p.gamma_phi * (2.0 * pe * rho * pe - pe * rho - rho * pe);
  return out;
}

Eigen::Matrix4cd liouvillian(const MarkovParams& p) {
  check_finite(p);
  const Complex i_unit(0.0, 1.0);
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  const Eigen::Matrix2cd h = hamiltonian(p);
  Eigen::Matrix4cd l = -i_unit * (kron(id, h) - kron(h.transpose(), id));
  l += p.gamma * dissipator(lowering());
  l += 2.0 * p.gamma_phi * dissipator(excited_projector());
  return l;
}

QubitDensityMatrix steady_state(const MarkovParams& p) {
  check_finite(p);
  if (!(p.gamma > 0.0)) throw InvalidInput("steady_state: gamma must be positive");
  if (!(p.gamma + 2.0 * p.gamma_phi > 0.0))
    throw InvalidInput("steady_state: gamma + 2 gamma_phi must be positive");

  const Eigen::Matrix4cd l = liouvillian(p);
  Eigen::JacobiSVD<Eigen::Matrix4cd> svd(l, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double scale = std::max(s(0), 1e-300);
  if (s(2) <= 1e-12 * scale || s(3) > 1e-8 * scale)
    throw DegenerateProblem("steady_state: Liouvillian null space is not one-dimensional");

  const Eigen::Vector4cd v = svd.matrixV().col(3);
  Eigen::Matrix2cd rho;
  rho << v(0), v(2), v(1), v(3);
  const Complex tr = rho.trace();
  if (std::abs(tr) < 1e-300) throw DegenerateProblem("steady_state: null vector is traceless");
  rho /= tr;
  rho = (0.5 * (rho + rho.adjoint())).eval();
  return QubitDensityMatrix(rho);
}

BlochVector bloch_steady_state(const MarkovParams& p) {
  check_finite(p);
  if (!(p.gamma > 0.0)) throw InvalidInput("bloch_steady_state: gamma must be positive");
  if (!(p.gamma + 2.0 * p.gamma_phi > 0.0))
    throw InvalidInput("bloch_steady_state: gamma + 2 gamma_phi must be positive");

  // d r/dt = A r + b, read off the master equation column by column.
  auto bloch_rate = [&](const Eigen::Vector3d& r) {
    Eigen::Matrix2cd rho;
    rho(kExcited, kExcited) = 0.5 * (1.0 + r.z());
    rho(kGround, kGround) = 0.5 * (1.0 - r.z());
    rho(kExcited, kGround) = Complex(0.5 * r.x(), -0.5 * r.y());
    rho(kGround, kExcited) = std::conj(rho(kExcited, kGround));
    const Eigen::Matrix2cd d = lindblad_rhs(p, rho);
    const Complex deg = d(kExcited, kGround);
    return Eigen::Vector3d(2.0 * deg.real(), -2.0 * deg.imag(), (d(kExcited, kExcited) - d(kGround, kGround)).real());
  };
  const Eigen::Vector3d b = bloch_rate(Eigen::Vector3d::Zero());
  Eigen::Matrix3d a;
  for (int j = 0; j < 3; ++j) a.col(j) = bloch_rate(Eigen::Vector3d::Unit(j)) - b;
  const Eigen::Vector3d r = a.partialPivLu().solve(-b);
  if (!r.allFinite()) throw DegenerateProblem("bloch_steady_state: singular Bloch equations");
  return {r.x(), r.y(), r.z()};
}

std::vector<Eigen::Matrix2cd> evolve(const MarkovParams& p, const Eigen::Matrix2cd& rho0,
                                     const std::vector<double>& times, const EvolveOptions& opts) {
  check_finite(p);
  if (times.empty()) return {};
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] >= times[i - 1])) throw InvalidInput("evolve: time grid must be monotone");

  const double rate = max_rate(p);
  const double h_max = opts.max_step > 0.0 ? opts.max_step : 0.01 / rate;
  if (h_max > 0.1 / rate) throw InvalidInput("evolve: step exceeds 0.1 / (largest rate)");

  auto rk4 = [&](const Eigen::Matrix2cd& rho, double h) {
    const Eigen::Matrix2cd k1 = lindblad_rhs(p, rho);
    const Eigen::Matrix2cd k2 = lindblad_rhs(p, rho + 0.5 * h * k1);
    const Eigen::Matrix2cd k3 = lindblad_rhs(p, rho + 0.5 * h * k2);
    const Eigen::Matrix2cd k4 = lindblad_rhs(p, rho + h * k3);
    return Eigen::Matrix2cd(rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  };

  std::vector<Eigen::Matrix2cd> out;
  out.reserve(times.size());
  Eigen::Matrix2cd rho = rho0;
  out.push_back(rho);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double span = times[i] - times[i - 1];
    if (span > 0.0) {
      const auto n = static_cast<long>(std::ceil(span / h_max - 1e-12));
      const double h = span / static_cast<double>(n);
      for (long k = 0; k < n; ++k) rho = rk4(rho, h);
    }
    out.push_back(rho);
  }
  return out;
}

std::vector<QubitDensityMatrix> evolve_states(const MarkovParams& p, const QubitDensityMatrix& rho0,
                                              const std::vector<double>& times, const EvolveOptions& opts) {
  std::vector<QubitDensityMatrix> out;
  for (const auto& m : evolve(p, rho0.matrix(), times, opts)) out.emplace_back(QubitDensityMatrix::normalized(m));
  return out;
}

std::vector<BoundaryPoint> markov_boundary(const std::vector<double>& omega_grid, double gamma) {
  std::vector<BoundaryPoint> out;
  out.reserve(omega_grid.size());
  for (double omega : omega_grid) {
    if (!(omega >= 0.0)) throw InvalidInput("markov_boundary: drive amplitudes must be nonnegative");
    out.push_back({omega, steady_state({gamma, 0.0, omega, 0.0})});
  }
  return out;
}

}  // namespace nmss
