#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "nmss/errors.hpp"
#include "nmss/tensors.hpp"

namespace nmss {

/// Basis order used for the TLS everywhere: index 0 = |g>, index 1 = |e>.
inline constexpr int kGround = 0;
inline constexpr int kExcited = 1;

struct BlochVector {
  double x{0}, y{0}, z{0};

  Eigen::Vector3d vec() const { return {x, y, z}; }
  double norm() const { return vec().norm(); }
};

/// 2x2 Hermitian, unit-trace, positive semidefinite TLS state.
///
/// Bloch convention: rho = (I + x sx + y sy + z sz) / 2 with sz = |e><e| - |g><g|,
/// so x = 2 Re(rho_eg), y = -2 Im(rho_eg), z = rho_ee - rho_gg.
class QubitDensityMatrix {
 public:
  static constexpr double kHermitianTol = 1e-10;
  static constexpr double kTraceTol = 1e-8;
  static constexpr double kPositivityTol = 1e-8;

  QubitDensityMatrix() : rho_(Eigen::Matrix2cd::Zero()) { rho_(kGround, kGround) = 1.0; }

  /// Validates all invariants; the stored matrix is symmetrized.
  explicit QubitDensityMatrix(const Eigen::Matrix2cd& rho) : rho_(rho) {
    if (!rho.allFinite()) throw InvalidInput("QubitDensityMatrix: non-finite entries");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol)
      throw InvalidInput("QubitDensityMatrix: matrix is not Hermitian");
    if (std::abs(rho.trace() - Complex(1.0)) > kTraceTol)
      throw InvalidInput("QubitDensityMatrix: trace differs from 1");
    rho_ = 0.5 * (rho + rho.adjoint());
    if (min_eigenvalue() < -kPositivityTol)
      throw InvalidInput("QubitDensityMatrix: matrix is not positive semidefinite");
  }

  /// Rescales a Hermitian, positive-trace matrix to unit trace first.
  static QubitDensityMatrix normalized(const Eigen::Matrix2cd& rho) {
    const double tr = rho.trace().real();
    if (!(tr > 0.0)) throw InvalidInput("QubitDensityMatrix::normalized: trace must be positive");
    return QubitDensityMatrix(rho / tr);
  }

  static QubitDensityMatrix from_bloch(const BlochVector& b) {
    Eigen::Matrix2cd rho;
    rho(kExcited, kExcited) = 0.5 * (1.0 + b.z);
    rho(kGround, kGround) = 0.5 * (1.0 - b.z);
    rho(kExcited, kGround) = Complex(0.5 * b.x, -0.5 * b.y);
    rho(kGround, kExcited) = std::conj(rho(kExcited, kGround));
    return QubitDensityMatrix(rho);
  }

  static QubitDensityMatrix pure(const Eigen::Vector2cd& psi) {
    const double n = psi.norm();
    if (!(n > 0.0)) throw InvalidInput("QubitDensityMatrix::pure: zero vector");
    const Eigen::Vector2cd v = psi / n;
    return QubitDensityMatrix(v * v.adjoint());
  }

  static QubitDensityMatrix ground() { return pure(Eigen::Vector2cd(1.0, 0.0)); }
  static QubitDensityMatrix excited() { return pure(Eigen::Vector2cd(0.0, 1.0)); }

  const Eigen::Matrix2cd& matrix() const { return rho_; }
  double rho_ee() const { return rho_(kExcited, kExcited).real(); }
  double rho_gg() const { return rho_(kGround, kGround).real(); }
  Complex rho_eg() const { return rho_(kExcited, kGround); }

  BlochVector bloch() const {
    return {2.0 * rho_eg().real(), -2.0 * rho_eg().imag(), rho_ee() - rho_gg()};
  }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(rho_, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
  }

  double purity() const { return (rho_ * rho_).trace().real(); }
  bool is_pure(double tol = 1e-8) const { return std::abs(purity() - 1.0) < tol; }

  /// Dominant eigenvector; meaningful for pure states.
  Eigen::Vector2cd state_vector() const {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(rho_);
    return es.eigenvectors().col(1);
  }

 private:
  Eigen::Matrix2cd rho_;
};

}  // namespace nmss
