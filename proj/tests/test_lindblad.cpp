#include <doctest.h>

#include <cmath>
#include <random>

#include "nmss/lindblad.hpp"

using namespace nmss;

namespace {

// Resonant closed form of the stationary Bloch equations.
BlochVector closed_form(double gamma, double gamma_phi, double omega) {
  const double g2 = 0.5 * gamma + gamma_phi;
  const double den = gamma * g2 + omega * omega;
  return {0.0, omega * gamma / den, -gamma * g2 / den};
}

double bloch_gap(const BlochVector& a, const BlochVector& b) { return (a.vec() - b.vec()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("steady_state: undriven TLS relaxes to the ground state") {
  const auto b = steady_state({1.0, 0.0, 0.0, 0.0}).bloch();
  CHECK(bloch_gap(b, {0, 0, -1}) < 1e-12);
}

TEST_CASE("steady_state: coherence maximum at omega = gamma / sqrt 2") {
  const auto r = steady_state({1.0, 0.0, 1.0 / std::sqrt(2.0), 0.0});
  CHECK(r.rho_ee() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(std::abs(r.rho_eg()) == doctest::Approx(1.0 / std::sqrt(8.0)).epsilon(1e-12));
}

TEST_CASE("steady_state: saturation at strong drive") {
  const auto r = steady_state({1.0, 0.0, 100.0, 0.0});
  CHECK(std::abs(r.rho_ee() - 0.5) < 1e-3);
  CHECK(std::abs(r.rho_eg()) < 1e-2);
}

TEST_CASE("steady_state: matches the closed form and has zero residual") {
  std::mt19937 rng(30);
  std::uniform_real_distribution<double> u(0.01, 5.0);
  for (int i = 0; i < 200; ++i) {
    const MarkovParams p{u(rng), u(rng) - 0.01, u(rng), 0.0};
    const auto r = steady_state(p);
    CHECK(bloch_gap(r.bloch(), closed_form(p.gamma, p.gamma_phi, p.omega)) < 1e-10);
    CHECK(lindblad_rhs(p, r.matrix()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(bloch_gap(bloch_steady_state(p), r.bloch()) < 1e-10);
  }
}

TEST_CASE("steady_state: detuned and negative-dephasing instances have zero residual") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  int accepted = 0;
  while (accepted < 100) {
    const double gamma = 0.1 + std::abs(u(rng));
    const double omega = std::abs(u(rng));
    const double delta = u(rng);
    const double gphi = -0.45 * std::abs(u(rng)) * std::min(omega * omega / (2.0 * gamma), 0.5 * gamma);
    // |r| <= 1 in the stationary Bloch solution:
    // Gamma2^2 Omega^2 + 2 gamma gamma_phi (Delta^2 + Gamma2^2) >= 0
    const double g2 = 0.5 * gamma + gphi;
    if (g2 * g2 * omega * omega + 2.0 * gamma * gphi * (delta * delta + g2 * g2) < 1e-3) continue;
    ++accepted;
    const MarkovParams p{gamma, gphi, omega, delta};
    const auto r = steady_state(p);
    CHECK(lindblad_rhs(p, r.matrix()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(bloch_gap(bloch_steady_state(p), r.bloch()) < 1e-9);
  }
}

TEST_CASE("steady_state: rejects non-unique parameters") {
  CHECK_THROWS_AS(steady_state({0.0, 0.1, 1.0, 0.0}), InvalidInput);
  CHECK_THROWS_AS(steady_state({1.0, -0.6, 1.0, 0.0}), InvalidInput);
  CHECK_THROWS_AS(bloch_steady_state({-1.0, 0.0, 1.0, 0.0}), InvalidInput);
}

TEST_CASE("with_mirror: renormalized rate") {
  CHECK(MarkovParams::with_mirror(1.0, 0.0, 1.0).gamma == doctest::Approx(2.0));
  CHECK(std::abs(MarkovParams::with_mirror(1.0, M_PI / 2, 1.0).gamma) < 1e-15);
}

TEST_CASE("evolve: stationary state stays put") {
  const MarkovParams p{1.0, 0.2, 1.3, 0.0};
  const auto ss = steady_state(p);
  const auto traj = evolve(p, ss.matrix(), {0.0, 1.0, 5.0, 10.0});
  for (const auto& m : traj) CHECK((m - ss.matrix()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("evolve: free decay and dephasing follow the closed forms") {
  const double gamma = 0.7, gphi = 0.3;
  std::vector<double> times;
  for (int i = 0; i <= 20; ++i) times.push_back(0.25 * i);
  const auto decay = evolve_states({gamma, 0.0, 0.0, 0.0}, QubitDensityMatrix::excited(), times);
  for (std::size_t i = 0; i < times.size(); ++i) CHECK(std::abs(decay[i].rho_ee() - std::exp(-gamma * times[i])) < 1e-6);

  const auto plus = QubitDensityMatrix::from_bloch({1, 0, 0});
  const auto deph = evolve_states({gamma, gphi, 0.0, 0.0}, plus, times);
  for (std::size_t i = 0; i < times.size(); ++i)
    CHECK(std::abs(std::abs(deph[i].rho_eg()) - 0.5 * std::exp(-(0.5 * gamma + gphi) * times[i])) < 1e-6);
}

TEST_CASE("evolve: step halving converges; trace and positivity hold") {
  const MarkovParams p{1.0, 0.1, 2.0, 0.3};
  const Eigen::Matrix2cd rho0 = QubitDensityMatrix::excited().matrix();
  const auto coarse = evolve(p, rho0, {0.0, 3.0}, {0.002});
  const auto fine = evolve(p, rho0, {0.0, 3.0}, {0.001});
  CHECK((coarse.back() - fine.back()).cwiseAbs().maxCoeff() < 1e-8);

  std::vector<double> times;
  for (int i = 0; i <= 300; ++i) times.push_back(0.01 * i);
  for (const auto& m : evolve(p, rho0, times)) {
    CHECK(std::abs(m.trace() - Complex(1.0)) < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(0.5 * (m + m.adjoint()));
    CHECK(es.eigenvalues().minCoeff() > -1e-8);
  }
}

TEST_CASE("evolve: long horizon reaches the steady state from any start") {
  std::mt19937 rng(32);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  for (int i = 0; i < 5; ++i) {
    const MarkovParams p{u(rng), u(rng) * 0.5, u(rng), 0.0};
    const auto end = evolve(p, QubitDensityMatrix::excited().matrix(), {0.0, 60.0 / p.gamma}).back();
    CHECK((end - steady_state(p).matrix()).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("evolve: rejects oversized steps and unsorted grids") {
  const MarkovParams p{1.0, 0.0, 1.0, 0.0};
  CHECK_THROWS_AS(evolve(p, Eigen::Matrix2cd::Identity() / 2.0, {0.0, 1.0}, {0.5}), InvalidInput);
  CHECK_THROWS_AS(evolve(p, Eigen::Matrix2cd::Identity() / 2.0, {1.0, 0.0}), InvalidInput);
}

TEST_CASE("markov_boundary: pole at zero drive, coherence maximum 1/sqrt 8") {
  const auto pole = markov_boundary({0.0}, 1.0);
  CHECK(bloch_gap(pole[0].state.bloch(), {0, 0, -1}) < 1e-12);

  std::vector<double> grid;
  const double step = 1e-3;
  for (int i = 0; i <= 3000; ++i) grid.push_back(step * i);
  const auto curve = markov_boundary(grid, 1.0);
  double best = 0, at = 0, best_ee = 0;
  for (const auto& b : curve) {
    best_ee = std::max(best_ee, b.state.rho_ee());
    if (std::abs(b.state.rho_eg()) > best) {
      best = std::abs(b.state.rho_eg());
      at = b.omega;
    }
  }
  CHECK(std::abs(best - 1.0 / std::sqrt(8.0)) < 1e-4);
  CHECK(std::abs(at - 1.0 / std::sqrt(2.0)) <= step);
  CHECK(best_ee <= 0.5);
  CHECK_THROWS_AS(markov_boundary({-1.0}, 1.0), InvalidInput);
}

TEST_CASE("markov_boundary: dephased states lie strictly inside") {
  std::vector<double> grid;
  for (int i = 0; i <= 4000; ++i) grid.push_back(0.005 * i);
  const auto curve = markov_boundary(grid, 1.0);
  for (double gphi : {0.05, 0.3, 1.0})
    for (double omega : {0.3, 0.7, 2.0}) {
      const auto b = steady_state({1.0, gphi, omega, 0.0}).bloch();
      double nearest = 1e9;
      for (const auto& c : curve) nearest = std::min(nearest, (c.state.bloch().vec() - b.vec()).norm());
      CHECK(nearest > 1e-3);
      // less coherence than the boundary point with the same population
      const double omega_b = std::sqrt(-0.5 / b.z - 0.5);
      CHECK(std::abs(b.y) < -2.0 * b.z * omega_b);
    }
}
