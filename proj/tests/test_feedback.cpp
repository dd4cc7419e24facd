#include <doctest.h>

#include <cmath>

#include "dense_oracle.hpp"
#include "nmss/feedback.hpp"
#include "nmss/lindblad.hpp"
#include "nmss/measures.hpp"

using namespace nmss;

namespace {

NumericsParams numerics(double dt, double t_max) {
  NumericsParams np;
  np.dt = dt;
  np.t_max = t_max;
  np.d_max = 64;
  np.svd_cutoff = 0.0;
  return np;
}

}  // namespace

TEST_CASE("step_unitary: decoupled and undriven gives identity") {
  SystemParams sp;
  sp.gamma_l = sp.gamma_r = 0.0;
  const auto u = step_unitary(sp, numerics(0.01, 1.0));
  CHECK((u - ComplexMatrix::Identity(18, 18)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("step_unitary: unitary for generic parameters") {
  SystemParams sp{1.7, 0.3, 0.9, 0.5, 0.4, 0.6};
  for (Eigen::Index d : {2, 3, 4}) {
    NumericsParams np = numerics(0.02, 1.0);
    np.d_bin = d;
    CHECK(unitarity_residual(step_unitary(sp, np)) < 1e-10);
  }
  CHECK_THROWS_AS(step_unitary(SystemParams{1.0, 0.0, 0.0, 0.0, -0.1, 0.5}, numerics(0.01, 1.0)), InvalidInput);
}

TEST_CASE("step_unitary: one-photon emission amplitude is sqrt(gamma_l dt) to leading order") {
  SystemParams sp{0.0, 0.0, 0.4, 1.0, 0.3, 0.7};
  for (double dt : {1e-2, 1e-3, 1e-4}) {
    const auto u = step_unitary(sp, numerics(dt, 1.0));
    // TLS (x) now (x) delayed, d = 3: |e,0,0> = 9, |g,1,0> = 3, |g,0,1> = 1
    const Complex now = u(3, 9), delayed = u(1, 9);
    CHECK(std::abs(now - std::sqrt(sp.gamma_l * dt)) < 2.0 * std::pow(dt, 1.5));
    CHECK(std::abs(delayed - std::sqrt(sp.gamma_r * dt) * std::exp(Complex(0, sp.phi))) < 2.0 * std::pow(dt, 1.5));
  }
}

TEST_CASE("markov_limit_unitary: phi = pi with equal rates is dark") {
  SystemParams sp{0.0, 0.0, M_PI, 0.0, 0.5, 0.5};
  const auto u = markov_limit_unitary(sp, numerics(0.01, 1.0));
  CHECK(unitarity_residual(u) < 1e-10);
  // |e,0> = index 3 for d = 3
  CHECK(std::abs(std::abs(u(3, 3)) - 1.0) < 1e-12);
  sp.tau = 0.1;
  CHECK_THROWS_AS(markov_limit_unitary(sp, numerics(0.01, 1.0)), InvalidInput);
}

TEST_CASE("markov_limit_unitary: emission doubles for phi = 0") {
  SystemParams sp{0.0, 0.0, 0.0, 0.0, 0.5, 0.5};
  const double dt = 1e-4;
  const auto u = markov_limit_unitary(sp, numerics(dt, 1.0));
  // |e,0> -> |g,1>: probability 2 gamma' dt with gamma' = 1 per side pair
  CHECK(std::norm(u(1, 3)) == doctest::Approx(2.0 * dt).epsilon(1e-3));
}

TEST_CASE("delay_steps, auto_dt and the rate bound") {
  SystemParams sp{2.0, 0.0, 0.0, 0.5, 0.5, 0.5};
  CHECK(delay_steps(sp, numerics(0.025, 1.0)) == 20);
  try {
    delay_steps(sp, numerics(0.03, 1.0));
    FAIL("expected a rejection");
  } catch (const InvalidInput& e) {
    CHECK(std::string(e.what()).find("nearest admissible dt") != std::string::npos);
  }
  const double dt = auto_dt(sp);
  CHECK(dt * 2.0 <= NumericsParams::kMaxRateStep + 1e-15);
  CHECK(std::abs(sp.tau / dt - std::round(sp.tau / dt)) < 1e-9);
  CHECK_THROWS_AS(numerics(0.05, 1.0).validate(sp), InvalidInput);
  CHECK_NOTHROW(numerics(dt, 1.0).validate(sp));
}

TEST_CASE("simulate: undriven ground state stays dark") {
  SystemParams sp{0.0, 0.0, 0.0, 0.1, 0.5, 0.5};
  const auto traj = simulate(sp, numerics(0.01, 1.0));
  REQUIRE(!traj.tls_states.empty());
  for (std::size_t i = 0; i < traj.tls_states.size(); ++i) {
    CHECK(traj.tls_states[i].rho_gg() == doctest::Approx(1.0));
    CHECK(std::abs(traj.out_bin_population[i]) < 1e-14);
    CHECK(std::abs(traj.norm_history[i] - 1.0) < 1e-12);
  }
  CHECK(traj.delay_steps == 10);
}

TEST_CASE("simulate: matches a dense simulation of every bin") {
  // k = 2, d = 3: bins b_{-2}, b_{-1}, b_0..b_5 all kept explicitly.
  SystemParams sp{1.3, 0.2, 0.7, 0.04, 0.4, 0.6};
  NumericsParams np = numerics(0.02, 0.12);
  np.ss_window = 100.0;
  const std::size_t k = 2, steps = 6;
  SimulateOptions opts;
  opts.initial_tls = QubitDensityMatrix::pure(Eigen::Vector2cd(0.6, Complex(0.0, 0.8)));
  const Trajectory traj = simulate(sp, np, opts);
  REQUIRE(traj.steps == steps);

  std::vector<Eigen::Index> dims{2};
  std::vector<ComplexVector> locals{opts.initial_tls.state_vector()};
  for (std::size_t b = 0; b < k + steps; ++b) {
    dims.push_back(3);
    locals.push_back(ComplexVector::Unit(3, 0));
  }
  ComplexVector psi = oracle::kron(locals);
  const ComplexMatrix u = step_unitary(sp, np);
  for (std::size_t n = 0; n < steps; ++n) {
    const std::size_t now = 1 + k + n, delayed = 1 + n;  // site 0 is the TLS
    psi = oracle::apply_sites(psi, dims, {0, now, delayed}, u);
    const ComplexMatrix rho = oracle::reduced(psi, dims, 0);
    const ComplexMatrix out = oracle::reduced(psi, dims, delayed);
    CHECK((traj.tls_states[n].matrix() - rho).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(traj.out_bin_population[n] == doctest::Approx(out(1, 1).real() + 2.0 * out(2, 2).real()).epsilon(1e-9));
  }
}

TEST_CASE("simulate: tau = 0 matches the doubled-rate master equation") {
  SystemParams sp{1.0, 0.0, 0.0, 0.0, 0.5, 0.5};
  NumericsParams np = numerics(0.005, 30.0);
  np.d_max = 16;
  np.svd_cutoff = 1e-8;
  const auto ss = steady_state_nm(sp, np);
  CHECK(ss.converged);
  const auto ref = steady_state({2.0, 0.0, 1.0, 0.0});
  CHECK(trace_distance(ss.state, ref) < 0.02);
  // steady states do not depend on the initial TLS state
  const auto from_e = steady_state_nm(sp, np, QubitDensityMatrix::excited());
  CHECK(trace_distance(from_e.state, ss.state) < 5e-3);
}

TEST_CASE("effective_decay_rate: weak drive at tau = 0 gives twice gamma") {
  SystemParams sp{0.1, 0.0, 0.0, 0.0, 0.5, 0.5};
  NumericsParams np = numerics(0.005, 30.0);
  np.d_max = 16;
  np.svd_cutoff = 1e-8;
  const auto r = effective_decay_rate(sp, np);
  CHECK(r.gamma_eff == doctest::Approx(2.0).epsilon(0.05));
  sp.omega = 0.0;
  CHECK_THROWS_AS(effective_decay_rate(sp, np), DegenerateProblem);
}

TEST_CASE("simulate: norm drift is bounded by the discarded weight") {
  SystemParams sp{2.0, 0.0, 0.0, 0.5, 0.5, 0.5};
  NumericsParams np = numerics(0.025, 3.0);
  np.d_max = 3;
  np.svd_cutoff = 1e-8;
  const auto traj = simulate(sp, np);
  CHECK(traj.cum_discarded > 0.0);
  for (double n : traj.norm_history) CHECK(std::abs(n - 1.0) <= 10.0 * traj.cum_discarded + 1e-8);
  CHECK(traj.max_bond_history.back() <= 3);
}

TEST_CASE("simulate: truncation failure is flagged, not thrown") {
  SystemParams sp{2.0, 0.0, 0.0, 0.5, 0.5, 0.5};
  NumericsParams np = numerics(0.025, 3.0);
  np.d_max = 1;
  np.svd_cutoff = 1e-8;
  const auto traj = simulate(sp, np);
  CHECK(traj.truncation_limited);
  CHECK(traj.max_step_discarded > kTruncationFailureWeight);
}

TEST_CASE("simulate: parameter validation") {
  CHECK_THROWS_AS(simulate(SystemParams{1.0, 0.0, 0.0, -1.0, 0.5, 0.5}, numerics(0.01, 1.0)), InvalidInput);
  CHECK_THROWS_AS(simulate(SystemParams{1.0, 0.0, 0.0, 0.0, 0.0, 0.0}, numerics(0.01, 1.0)), InvalidInput);
  SimulateOptions mixed;
  mixed.initial_tls = QubitDensityMatrix::from_bloch({0, 0, 0});
  CHECK_THROWS_AS(simulate(SystemParams{1.0, 0.0, 0.0, 0.0, 0.5, 0.5}, numerics(0.01, 1.0), mixed), InvalidInput);
}
