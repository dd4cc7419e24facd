#pragma once

// Dense kernels shared by the MPS engine and the Lindblad reference:
// truncated SVD, exponentials of anti-Hermitian generators and a small
// row-major tensor type with pairwise contraction.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numeric>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nmss/errors.hpp"

namespace nmss {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {
/// Thin SVD through LAPACK's divide-and-conquer driver. Returns false when
/// the library was built without LAPACKE or the driver reported an error.
bool lapack_svd(const ComplexMatrix& m, ComplexMatrix& u, Eigen::VectorXd& s, ComplexMatrix& v);
}  // namespace detail

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// Thin SVD with rank truncation. `left * singular_values.asDiagonal() *
/// right.adjoint()` approximates the input; the squared Frobenius error of
/// that approximation equals `discarded_weight`.
template <typename Scalar>
struct SvdResult {
  using RealScalar = typename Eigen::NumTraits<Scalar>::Real;

  DenseMatrix<Scalar> left;
  Eigen::Matrix<RealScalar, Eigen::Dynamic, 1> singular_values;
  DenseMatrix<Scalar> right;
  RealScalar discarded_weight{0};

  Eigen::Index rank() const { return singular_values.size(); }

  DenseMatrix<Scalar> reconstruct() const {
    return left * singular_values.template cast<Scalar>().asDiagonal() * right.adjoint();
  }
};

/// Keeps at most `max_rank` singular values, and only those larger than
/// `cutoff` times the largest one. At least one value is always kept.
template <typename Derived>
SvdResult<typename Derived::Scalar> svd_truncate(const Eigen::MatrixBase<Derived>& m,
                                                 Eigen::Index max_rank, double cutoff) {
  using Scalar = typename Derived::Scalar;
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  if (max_rank < 1) throw InvalidInput("svd_truncate: max_rank must be >= 1");
  if (!(cutoff >= 0.0)) throw InvalidInput("svd_truncate: cutoff must be >= 0");
  if (m.rows() == 0 || m.cols() == 0) throw InvalidInput("svd_truncate: empty matrix");
  if (!all_finite(m)) throw InvalidInput("svd_truncate: non-finite entries");

  DenseMatrix<Scalar> u, v;
  Eigen::Matrix<Real, Eigen::Dynamic, 1> s;
  bool done = false;
  if constexpr (std::is_same_v<Scalar, Complex>) done = detail::lapack_svd(m, u, s, v);
  if (!done) {
    Eigen::BDCSVD<DenseMatrix<Scalar>> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    s = svd.singularValues();
    v = svd.matrixV();
  }
  // BDCSVD in Eigen 3.4 occasionally returns NaNs on rank-deficient input.
  if (!u.allFinite() || !v.allFinite() || !s.allFinite()) {
    Eigen::JacobiSVD<DenseMatrix<Scalar>> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    s = svd.singularValues();
    v = svd.matrixV();
    if (!u.allFinite() || !v.allFinite() || !s.allFinite()) throw NumericalFailure("svd_truncate: SVD failed");
  }
  const Eigen::Index full = s.size();
  const Real threshold = static_cast<Real>(cutoff) * s(0);

  Eigen::Index keep = 0;
  while (keep < full && keep < max_rank && s(keep) > threshold) ++keep;
  keep = std::max<Eigen::Index>(keep, 1);

  SvdResult<Scalar> out;
  out.left = u.leftCols(keep);
  out.singular_values = s.head(keep);
  out.right = v.leftCols(keep);
  out.discarded_weight = s.tail(full - keep).squaredNorm();
  return out;
}

/// exp(g) for anti-Hermitian g, computed from the eigendecomposition of the
/// Hermitian matrix i*g so the result is unitary up to rounding.
template <typename Derived>
DenseMatrix<typename Derived::Scalar> expm_antihermitian(const Eigen::MatrixBase<Derived>& g,
                                                         double tolerance = 1e-10) {
  using Scalar = typename Derived::Scalar;
  using Real = typename Eigen::NumTraits<Scalar>::Real;
  static_assert(Eigen::NumTraits<Scalar>::IsComplex, "expm_antihermitian needs a complex scalar");
  if (g.rows() != g.cols() || g.rows() == 0)
    throw InvalidInput("expm_antihermitian: generator must be square and non-empty");
  if (!all_finite(g)) throw InvalidInput("expm_antihermitian: non-finite entries");
  const Real scale = std::max<Real>(Real(1), g.cwiseAbs().maxCoeff());
  if ((g + g.adjoint()).cwiseAbs().maxCoeff() > tolerance * scale)
    throw InvalidInput("expm_antihermitian: generator is not anti-Hermitian");

  const Scalar i_unit(0, 1);
  DenseMatrix<Scalar> h = i_unit * g;
  h = (0.5 * (h + h.adjoint())).eval();
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> eig(h);
  // g = -i h  =>  exp(g) = V exp(-i lambda) V^dagger
  const auto phases = (-i_unit * eig.eigenvalues().template cast<Scalar>()).array().exp();
  return eig.eigenvectors() * phases.matrix().asDiagonal() * eig.eigenvectors().adjoint();
}

/// max |U^dagger U - I|
template <typename Derived>
double unitarity_residual(const Eigen::MatrixBase<Derived>& u) {
  using Scalar = typename Derived::Scalar;
  if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
  const DenseMatrix<Scalar> id = DenseMatrix<Scalar>::Identity(u.rows(), u.cols());
  return static_cast<double>((u.adjoint() * u - id).cwiseAbs().maxCoeff());
}

/// Dense tensor with row-major entries (last index fastest).
template <typename Scalar>
class Tensor {
 public:
  using Index = Eigen::Index;
  using Storage = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Tensor() = default;

  explicit Tensor(std::vector<Index> dims) : dims_(std::move(dims)) {
    check_dims();
    data_ = Storage::Zero(product(dims_));
  }

  Tensor(std::vector<Index> dims, Storage data) : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims();
    if (data_.size() != product(dims_)) throw InvalidInput("Tensor: data size does not match shape");
  }

  static Tensor from_matrix(const DenseMatrix<Scalar>& m) {
    Tensor t({m.rows(), m.cols()});
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) t.data_(r * m.cols() + c) = m(r, c);
    return t;
  }

  static Tensor from_vector(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v) {
    return Tensor({v.size()}, v);
  }

  int rank() const { return static_cast<int>(dims_.size()); }
  const std::vector<Index>& dims() const { return dims_; }
  Index dim(int axis) const { return dims_.at(static_cast<std::size_t>(axis)); }
  Index size() const { return data_.size(); }
  const Storage& data() const { return data_; }
  Storage& data() { return data_; }

  Index offset(const std::vector<Index>& idx) const {
    Index off = 0;
    for (std::size_t a = 0; a < dims_.size(); ++a) off = off * dims_[a] + idx[a];
    return off;
  }
  Scalar& operator()(const std::vector<Index>& idx) { return data_(offset(idx)); }
  const Scalar& operator()(const std::vector<Index>& idx) const { return data_(offset(idx)); }

  DenseMatrix<Scalar> to_matrix() const {
    if (rank() != 2) throw InvalidInput("Tensor::to_matrix: rank must be 2");
    DenseMatrix<Scalar> m(dims_[0], dims_[1]);
    for (Index r = 0; r < dims_[0]; ++r)
      for (Index c = 0; c < dims_[1]; ++c) m(r, c) = data_(r * dims_[1] + c);
    return m;
  }

  /// Axis `a` of the result is axis `order[a]` of this tensor.
  Tensor permuted(const std::vector<int>& order) const {
    if (order.size() != dims_.size()) throw InvalidInput("Tensor::permuted: wrong permutation length");
    std::vector<int> seen(order.size(), 0);
    for (int o : order) {
      if (o < 0 || o >= rank() || seen[static_cast<std::size_t>(o)]++)
        throw InvalidInput("Tensor::permuted: not a permutation");
    }
    std::vector<Index> new_dims(order.size());
    for (std::size_t a = 0; a < order.size(); ++a) new_dims[a] = dims_[static_cast<std::size_t>(order[a])];

    std::vector<Index> old_strides(dims_.size(), 1);
    for (int a = rank() - 2; a >= 0; --a)
      old_strides[static_cast<std::size_t>(a)] =
          old_strides[static_cast<std::size_t>(a) + 1] * dims_[static_cast<std::size_t>(a) + 1];

    Tensor out(new_dims);
    std::vector<Index> idx(order.size(), 0);
    for (Index lin = 0; lin < out.size(); ++lin) {
      Index src = 0;
      for (std::size_t a = 0; a < order.size(); ++a)
        src += idx[a] * old_strides[static_cast<std::size_t>(order[a])];
      out.data_(lin) = data_(src);
      for (int a = rank() - 1; a >= 0; --a) {
        if (++idx[static_cast<std::size_t>(a)] < new_dims[static_cast<std::size_t>(a)]) break;
        idx[static_cast<std::size_t>(a)] = 0;
      }
    }
    return out;
  }

  Tensor& operator*=(const Scalar& alpha) {
    data_ *= alpha;
    return *this;
  }
  friend Tensor operator*(const Scalar& alpha, Tensor t) { return t *= alpha; }

 private:
  static Index product(const std::vector<Index>& d) {
    return std::accumulate(d.begin(), d.end(), Index{1}, std::multiplies<>());
  }
  void check_dims() const {
    for (Index d : dims_)
      if (d <= 0) throw InvalidInput("Tensor: dimensions must be positive");
  }

  std::vector<Index> dims_;
  Storage data_;
};

using IndexPair = std::pair<int, int>;

/// Sums over each (axis of a, axis of b) pair. The result carries the free
/// axes of `a` in order, followed by the free axes of `b`.
template <typename Scalar>
Tensor<Scalar> contract(const Tensor<Scalar>& a, const Tensor<Scalar>& b,
                        const std::vector<IndexPair>& pairs) {
  using Index = Eigen::Index;
  std::vector<int> a_paired, b_paired;
  for (const auto& [ia, ib] : pairs) {
    if (ia < 0 || ia >= a.rank() || ib < 0 || ib >= b.rank())
      throw InvalidInput("contract: axis out of range");
    if (a.dim(ia) != b.dim(ib)) throw InvalidInput("contract: paired dimensions differ");
    if (std::find(a_paired.begin(), a_paired.end(), ia) != a_paired.end() ||
        std::find(b_paired.begin(), b_paired.end(), ib) != b_paired.end())
      throw InvalidInput("contract: axis paired twice");
    a_paired.push_back(ia);
    b_paired.push_back(ib);
  }

  std::vector<int> a_order, b_order;
  std::vector<Index> out_dims;
  Index free_a = 1, free_b = 1, inner = 1;
  for (int ax = 0; ax < a.rank(); ++ax) {
    if (std::find(a_paired.begin(), a_paired.end(), ax) == a_paired.end()) {
      a_order.push_back(ax);
      out_dims.push_back(a.dim(ax));
      free_a *= a.dim(ax);
    }
  }
  for (int ax : a_paired) {
    a_order.push_back(ax);
    inner *= a.dim(ax);
  }
  for (int ax : b_paired) b_order.push_back(ax);
  for (int ax = 0; ax < b.rank(); ++ax) {
    if (std::find(b_paired.begin(), b_paired.end(), ax) == b_paired.end()) {
      b_order.push_back(ax);
      out_dims.push_back(b.dim(ax));
      free_b *= b.dim(ax);
    }
  }

  const Tensor<Scalar> ap = a.permuted(a_order);
  const Tensor<Scalar> bp = b.permuted(b_order);
  // Row-major (free_a x inner) and (inner x free_b) blocks.
  using RowMajor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> am(ap.data().data(), free_a, inner);
  Eigen::Map<const RowMajor> bm(bp.data().data(), inner, free_b);
  RowMajor prod = am * bm;

  if (out_dims.empty()) out_dims.push_back(1);
  typename Tensor<Scalar>::Storage flat = Eigen::Map<const typename Tensor<Scalar>::Storage>(prod.data(), prod.size());
  return Tensor<Scalar>(out_dims, std::move(flat));
}

}  // namespace nmss
