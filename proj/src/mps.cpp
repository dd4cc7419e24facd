#include "nmss/mps.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace nmss {
namespace {

using Eigen::Index;

constexpr double kGateUnitarityTol = 1e-8;

Index dim_product(const std::vector<Index>& dims) {
  return std::accumulate(dims.begin(), dims.end(), Index{1}, std::multiplies<>());
}

// Applies `gate` (Kronecker convention over `dims`) to the physical legs of a
// (left, dims..., right) block and reorders the legs to `order`. A null gate
// means identity.
ComplexVector apply_physical(const ComplexVector& theta, Index left, const std::vector<Index>& dims, Index right,
                             const ComplexMatrix* gate, const std::vector<int>& order) {
  const Index total = dim_product(dims);
  const std::size_t n = dims.size();

  std::vector<Index> kron_stride(n, 1);
  for (std::size_t j = n - 1; j-- > 0;) kron_stride[j] = kron_stride[j + 1] * dims[j + 1];
  std::vector<Index> out_dims(n);
  for (std::size_t j = 0; j < n; ++j) out_dims[j] = dims[static_cast<std::size_t>(order[j])];

  auto kron_of_memory = [&](Index m) {
    Index k = 0;
    for (std::size_t j = 0; j < n; ++j) {
      k += (m % dims[j]) * kron_stride[j];
      m /= dims[j];
    }
    return k;
  };
  // Output memory index -> Kronecker index of the same configuration in the
  // input leg order.
  auto kron_of_output = [&](Index m) {
    Index k = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const Index t = m % out_dims[j];
      m /= out_dims[j];
      k += t * kron_stride[static_cast<std::size_t>(order[j])];
    }
    return k;
  };

  ComplexMatrix w(total, total);
  for (Index mo = 0; mo < total; ++mo) {
    const Index ko = kron_of_output(mo);
    for (Index mi = 0; mi < total; ++mi) {
      const Index ki = kron_of_memory(mi);
      w(mi, mo) = gate ? (*gate)(ko, ki) : Complex(ko == ki ? 1.0 : 0.0);
    }
  }

  ComplexVector out(theta.size());
  const Index block = left * total;
  for (Index c = 0; c < right; ++c) {
    Eigen::Map<const ComplexMatrix> in_c(theta.data() + c * block, left, total);
    Eigen::Map<ComplexMatrix> out_c(out.data() + c * block, left, total);
    out_c.noalias() = in_c * w;
  }
  return out;
}

void check_gate(const ComplexMatrix& gate, Index dim, const char* what) {
  if (gate.rows() != dim || gate.cols() != dim)
    throw InvalidInput(std::string(what) + ": gate dimension does not match the physical spaces");
  if (!gate.allFinite()) throw InvalidInput(std::string(what) + ": gate has non-finite entries");
  if (unitarity_residual(gate) > kGateUnitarityTol) throw InvalidInput(std::string(what) + ": gate is not unitary");
}

// Thin QR returning (Q, R) with Q having min(rows, cols) columns.
std::pair<ComplexMatrix, ComplexMatrix> thin_qr(const ComplexMatrix& m) {
  const Index r = std::min(m.rows(), m.cols());
  Eigen::HouseholderQR<ComplexMatrix> qr(m);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(m.rows(), r);
  ComplexMatrix rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  return {std::move(q), std::move(rr)};
}

}  // namespace

SiteTensor SiteTensor::zeros(Index l, Index p, Index r) {
  SiteTensor t;
  t.left = l;
  t.phys = p;
  t.right = r;
  t.data = ComplexVector::Zero(l * p * r);
  return t;
}

MpsState MpsState::new_chain(std::size_t n_bins, Index d_bin, const QubitDensityMatrix& system_state) {
  if (n_bins < 1) throw InvalidInput("new_chain: need at least one bin");
  if (d_bin < 2) throw InvalidInput("new_chain: d_bin must be >= 2");
  if (!system_state.is_pure()) throw InvalidInput("new_chain: system state must be pure");

  std::vector<ComplexVector> locals;
  locals.emplace_back(system_state.state_vector());
  ComplexVector vac = ComplexVector::Zero(d_bin);
  vac(0) = 1.0;
  for (std::size_t i = 0; i < n_bins; ++i) locals.push_back(vac);

  std::vector<long> labels{kSystemLabel};
  for (std::size_t i = 0; i < n_bins; ++i) labels.push_back(static_cast<long>(i));
  return product(locals, 0, std::move(labels));
}

MpsState MpsState::product(const std::vector<ComplexVector>& local_states, std::size_t system_index,
                           std::vector<long> labels) {
  if (local_states.empty()) throw InvalidInput("MpsState::product: empty chain");
  MpsState s;
  for (const auto& v : local_states) {
    const double n = v.norm();
    if (v.size() < 1 || !(n > 0.0) || !v.allFinite())
      throw InvalidInput("MpsState::product: invalid local state");
    SiteTensor t = SiteTensor::zeros(1, v.size(), 1);
    t.data = v / n;
    s.sites_.push_back(std::move(t));
  }
  if (labels.empty()) {
    for (std::size_t i = 0; i < local_states.size(); ++i)
      labels.push_back(i == system_index ? kSystemLabel : static_cast<long>(i));
  }
  if (labels.size() != local_states.size()) throw InvalidInput("MpsState::product: label count mismatch");
  s.labels_ = std::move(labels);
  s.center_ = 0;
  return s;
}

Index MpsState::bond_dim(std::size_t bond) const {
  if (bond > sites_.size()) throw InvalidInput("bond_dim: bond out of range");
  if (bond == sites_.size()) return sites_.back().right;
  return sites_[bond].left;
}

std::vector<Index> MpsState::bond_dimensions() const {
  std::vector<Index> out;
  for (std::size_t b = 0; b <= sites_.size(); ++b) out.push_back(bond_dim(b));
  return out;
}

Index MpsState::max_bond_dimension() const {
  const auto dims = bond_dimensions();
  return *std::max_element(dims.begin(), dims.end());
}

std::size_t MpsState::system_index() const { return find_label(kSystemLabel); }

std::size_t MpsState::find_label(long label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw InvalidInput("MpsState: label not present in chain");
  return static_cast<std::size_t>(it - labels_.begin());
}

void MpsState::check_site(std::size_t site, const char* what) const {
  if (site >= sites_.size()) throw InvalidInput(std::string(what) + ": site index out of range");
}

void MpsState::move_center(std::size_t target) {
  check_site(target, "move_center");
  while (center_ < target) {
    SiteTensor& a = sites_[center_];
    SiteTensor& b = sites_[center_ + 1];
    auto [q, r] = thin_qr(a.left_grouped());
    ComplexMatrix next = r * b.right_grouped();
    a.right = q.cols();
    a.data = Eigen::Map<const ComplexVector>(q.data(), q.size());
    b.left = next.rows();
    b.data = Eigen::Map<const ComplexVector>(next.data(), next.size());
    ++center_;
  }
  while (center_ > target) {
    SiteTensor& b = sites_[center_];
    SiteTensor& a = sites_[center_ - 1];
    auto [q, r] = thin_qr(b.right_grouped().adjoint());
    ComplexMatrix qa = q.adjoint();
    ComplexMatrix prev = a.left_grouped() * r.adjoint();
    b.left = qa.rows();
    b.data = Eigen::Map<const ComplexVector>(qa.data(), qa.size());
    a.right = prev.cols();
    a.data = Eigen::Map<const ComplexVector>(prev.data(), prev.size());
    --center_;
  }
}

double MpsState::split_into(std::size_t first, std::size_t count, ComplexVector theta,
                            const std::vector<Index>& dims, Index left, Index right, const Truncation& trunc,
                            int center_offset) {
  if (count == 2) {
    Eigen::Map<const ComplexMatrix> m(theta.data(), left * dims[0], dims[1] * right);
    auto svd = svd_truncate(m, trunc.max_bond, trunc.cutoff);
    const Index r = svd.rank();
    ComplexMatrix a_mat, b_mat;
    if (center_offset == 0) {
      a_mat = svd.left * svd.singular_values.cast<Complex>().asDiagonal();
      b_mat = svd.right.adjoint();
    } else {
      a_mat = svd.left;
      b_mat = svd.singular_values.cast<Complex>().asDiagonal() * svd.right.adjoint();
    }
    SiteTensor& a = sites_[first];
    SiteTensor& b = sites_[first + 1];
    a.left = left;
    a.phys = dims[0];
    a.right = r;
    a.data = Eigen::Map<const ComplexVector>(a_mat.data(), a_mat.size());
    b.left = r;
    b.phys = dims[1];
    b.right = right;
    b.data = Eigen::Map<const ComplexVector>(b_mat.data(), b_mat.size());
    center_ = first + static_cast<std::size_t>(center_offset);
    return svd.discarded_weight;
  }

  // Three sites: peel off the edge farther from the requested center first.
  if (center_offset == 2) {
    Eigen::Map<const ComplexMatrix> m(theta.data(), left * dims[0], dims[1] * dims[2] * right);
    auto svd = svd_truncate(m, trunc.max_bond, trunc.cutoff);
    const Index r = svd.rank();
    SiteTensor& a = sites_[first];
    a.left = left;
    a.phys = dims[0];
    a.right = r;
    a.data = Eigen::Map<const ComplexVector>(svd.left.data(), svd.left.size());
    ComplexMatrix rest = svd.singular_values.cast<Complex>().asDiagonal() * svd.right.adjoint();
    ComplexVector rest_v = Eigen::Map<const ComplexVector>(rest.data(), rest.size());
    const double w = split_into(first + 1, 2, std::move(rest_v), {dims[1], dims[2]}, r, right, trunc, 1);
    return svd.discarded_weight + w;
  }
  Eigen::Map<const ComplexMatrix> m(theta.data(), left * dims[0] * dims[1], dims[2] * right);
  auto svd = svd_truncate(m, trunc.max_bond, trunc.cutoff);
  const Index r = svd.rank();
  SiteTensor& c = sites_[first + 2];
  ComplexMatrix c_mat = svd.right.adjoint();
  c.left = r;
  c.phys = dims[2];
  c.right = right;
  c.data = Eigen::Map<const ComplexVector>(c_mat.data(), c_mat.size());
  ComplexMatrix rest = svd.left * svd.singular_values.cast<Complex>().asDiagonal();
  ComplexVector rest_v = Eigen::Map<const ComplexVector>(rest.data(), rest.size());
  const double w = split_into(first, 2, std::move(rest_v), {dims[0], dims[1]}, left, r, trunc, center_offset);
  return svd.discarded_weight + w;
}

double MpsState::apply_gate_adjacent(std::size_t left_site, const ComplexMatrix& gate, const Truncation& trunc,
                                     CenterSide side) {
  check_site(left_site + 1, "apply_gate_adjacent");
  const SiteTensor& a = sites_[left_site];
  const SiteTensor& b = sites_[left_site + 1];
  check_gate(gate, a.phys * b.phys, "apply_gate_adjacent");
  if (center_ < left_site) move_center(left_site);
  if (center_ > left_site + 1) move_center(left_site + 1);

  const std::vector<Index> dims{a.phys, b.phys};
  const Index left = a.left, right = b.right;
  ComplexMatrix t = a.left_grouped() * b.right_grouped();
  ComplexVector theta = apply_physical(Eigen::Map<const ComplexVector>(t.data(), t.size()), left, dims, right, &gate,
                                       {0, 1});
  const double w = split_into(left_site, 2, std::move(theta), dims, left, right, trunc,
                              side == CenterSide::Right ? 1 : 0);
  cum_discarded_ += w;
  return w;
}

double MpsState::swap_adjacent(std::size_t i, const Truncation& trunc, CenterSide side) {
  check_site(i + 1, "swap_adjacent");
  if (center_ < i) move_center(i);
  if (center_ > i + 1) move_center(i + 1);
  const SiteTensor& a = sites_[i];
  const SiteTensor& b = sites_[i + 1];
  const std::vector<Index> dims{a.phys, b.phys};
  const Index left = a.left, right = b.right;
  ComplexMatrix t = a.left_grouped() * b.right_grouped();
  ComplexVector theta =
      apply_physical(Eigen::Map<const ComplexVector>(t.data(), t.size()), left, dims, right, nullptr, {1, 0});
  const double w = split_into(i, 2, std::move(theta), {dims[1], dims[0]}, left, right, trunc,
                              side == CenterSide::Right ? 1 : 0);
  std::swap(labels_[i], labels_[i + 1]);
  cum_discarded_ += w;
  return w;
}

double MpsState::apply_three_site_gate(std::size_t first, const ComplexMatrix& gate, const Truncation& trunc,
                                       const std::array<int, 3>& output_order, int center_offset) {
  check_site(first + 2, "apply_three_site_gate");
  if (center_offset < 0 || center_offset > 2) throw InvalidInput("apply_three_site_gate: bad center offset");
  {
    std::array<int, 3> sorted = output_order;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != std::array<int, 3>{0, 1, 2}) throw InvalidInput("apply_three_site_gate: bad output order");
  }
  const std::vector<Index> dims{sites_[first].phys, sites_[first + 1].phys, sites_[first + 2].phys};
  check_gate(gate, dim_product(dims), "apply_three_site_gate");
  if (center_ < first || center_ > first + 2) move_center(first + 1);

  const SiteTensor& a = sites_[first];
  const SiteTensor& b = sites_[first + 1];
  const SiteTensor& c = sites_[first + 2];
  const Index left = a.left, right = c.right;
  ComplexMatrix ab = a.left_grouped() * b.right_grouped();
  Eigen::Map<const ComplexMatrix> ab_l(ab.data(), left * dims[0] * dims[1], b.right);
  ComplexMatrix t = ab_l * c.right_grouped();

  const std::vector<int> order(output_order.begin(), output_order.end());
  ComplexVector theta =
      apply_physical(Eigen::Map<const ComplexVector>(t.data(), t.size()), left, dims, right, &gate, order);
  std::vector<Index> out_dims(3);
  std::array<long, 3> old_labels{labels_[first], labels_[first + 1], labels_[first + 2]};
  for (std::size_t j = 0; j < 3; ++j) {
    out_dims[j] = dims[static_cast<std::size_t>(order[j])];
    labels_[first + j] = old_labels[static_cast<std::size_t>(order[j])];
  }
  const double w = split_into(first, 3, std::move(theta), out_dims, left, right, trunc, center_offset);
  cum_discarded_ += w;
  return w;
}

void MpsState::insert_product_site(std::size_t pos, const ComplexVector& local_state, long label) {
  if (pos > sites_.size()) throw InvalidInput("insert_product_site: position out of range");
  const double n = local_state.norm();
  if (!(n > 0.0) || !local_state.allFinite()) throw InvalidInput("insert_product_site: invalid local state");
  const Index bond = bond_dim(pos);
  const Index d = local_state.size();
  SiteTensor t = SiteTensor::zeros(bond, d, bond);
  for (Index s = 0; s < d; ++s)
    for (Index a = 0; a < bond; ++a) t.data(a + bond * (s + d * a)) = local_state(s) / n;
  sites_.insert(sites_.begin() + static_cast<std::ptrdiff_t>(pos), std::move(t));
  labels_.insert(labels_.begin() + static_cast<std::ptrdiff_t>(pos), label);
  if (center_ >= pos && sites_.size() > 1) ++center_;
}

void MpsState::retire_right_edge() {
  if (sites_.size() < 2) throw InvalidInput("retire_right_edge: cannot empty the chain");
  if (center_ == sites_.size() - 1) move_center(center_ - 1);
  sites_.pop_back();
  labels_.pop_back();
}

void MpsState::retire_left_edge() {
  if (sites_.size() < 2) throw InvalidInput("retire_left_edge: cannot empty the chain");
  if (center_ == 0) move_center(1);
  sites_.erase(sites_.begin());
  labels_.erase(labels_.begin());
  --center_;
}

ComplexMatrix MpsState::reduced_density_matrix(std::size_t site) const {
  check_site(site, "reduced_density_matrix");
  const SiteTensor& t = sites_[site];
  const Index d = t.phys;
  ComplexMatrix rho(d, d);

  if (site <= center_) {
    // Right environment of `site`, sweeping from the center.
    ComplexMatrix env = ComplexMatrix::Identity(sites_[center_].right, sites_[center_].right);
    for (std::size_t j = center_; j > site; --j) {
      const SiteTensor& s = sites_[j];
      ComplexMatrix next = ComplexMatrix::Zero(s.left, s.left);
      for (Index p = 0; p < s.phys; ++p) next.noalias() += s.slice(p) * env * s.slice(p).adjoint();
      env = std::move(next);
    }
    std::vector<ComplexMatrix> ae(static_cast<std::size_t>(d));
    for (Index p = 0; p < d; ++p) ae[static_cast<std::size_t>(p)] = t.slice(p) * env;
    for (Index p = 0; p < d; ++p)
      for (Index q = 0; q < d; ++q)
        rho(p, q) = (ae[static_cast<std::size_t>(p)].array() * t.slice(q).conjugate().array()).sum();
  } else {
    ComplexMatrix env = ComplexMatrix::Identity(sites_[center_].left, sites_[center_].left);
    for (std::size_t j = center_; j < site; ++j) {
      const SiteTensor& s = sites_[j];
      ComplexMatrix next = ComplexMatrix::Zero(s.right, s.right);
      for (Index p = 0; p < s.phys; ++p)
        next.noalias() += s.slice(p).transpose() * env * s.slice(p).conjugate();
      env = std::move(next);
    }
    for (Index p = 0; p < d; ++p) {
      ComplexMatrix ea = env.transpose() * t.slice(p);
      for (Index q = 0; q < d; ++q) rho(p, q) = (ea.array() * t.slice(q).conjugate().array()).sum();
    }
  }
  const Complex tr = rho.trace();
  if (!(std::abs(tr) > 0.0)) throw NumericalFailure("reduced_density_matrix: zero norm state");
  rho /= tr;
  return 0.5 * (rho + rho.adjoint());
}

QubitDensityMatrix MpsState::system_state() const {
  const ComplexMatrix rho = reduced_density_matrix(system_index());
  return QubitDensityMatrix(Eigen::Matrix2cd(rho));
}

double MpsState::site_number_expectation(std::size_t site) const {
  check_site(site, "site_number_expectation");
  if (labels_[site] == kSystemLabel)
    throw InvalidInput("site_number_expectation: the TLS site has no photon number; use reduced_density_matrix");
  const ComplexMatrix rho = reduced_density_matrix(site);
  double n = 0.0;
  for (Index k = 1; k < rho.rows(); ++k) n += static_cast<double>(k) * rho(k, k).real();
  return n;
}

double MpsState::norm() const { return sites_[center_].data.norm(); }

ComplexVector MpsState::to_dense() const {
  if (sites_.front().left != 1 || sites_.back().right != 1)
    throw InvalidInput("to_dense: boundary bonds must have dimension 1");
  ComplexMatrix psi = sites_.front().left_grouped();
  for (std::size_t i = 1; i < sites_.size(); ++i) {
    ComplexMatrix next = psi * sites_[i].right_grouped();
    psi = Eigen::Map<const ComplexMatrix>(next.data(), next.rows() * sites_[i].phys, sites_[i].right);
  }
  // psi is in memory order (first site fastest); reorder to Kronecker order.
  std::vector<Index> dims;
  for (const auto& s : sites_) dims.push_back(s.phys);
  const std::size_t n = dims.size();
  std::vector<Index> kron_stride(n, 1);
  for (std::size_t j = n - 1; j-- > 0;) kron_stride[j] = kron_stride[j + 1] * dims[j + 1];
  ComplexVector out(psi.size());
  for (Index m = 0; m < psi.size(); ++m) {
    Index rem = m, k = 0;
    for (std::size_t j = 0; j < n; ++j) {
      k += (rem % dims[j]) * kron_stride[j];
      rem /= dims[j];
    }
    out(k) = psi(m, 0);
  }
  return out;
}

double MpsState::isometry_residual() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (i == center_) continue;
    const SiteTensor& t = sites_[i];
    if (i < center_) {
      ComplexMatrix g = t.left_grouped().adjoint() * t.left_grouped();
      worst = std::max(worst, (g - ComplexMatrix::Identity(t.right, t.right)).cwiseAbs().maxCoeff());
    } else {
      ComplexMatrix g = t.right_grouped() * t.right_grouped().adjoint();
      worst = std::max(worst, (g - ComplexMatrix::Identity(t.left, t.left)).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

}  // namespace nmss
