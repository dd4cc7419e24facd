#pragma once

// Matrix product state for the TLS + time-bin chain.
//
// Site tensors are stored column-major with index order (left bond,
// physical, right bond), so both the left-grouped (left*phys x right) and
// the right-grouped (left x phys*right) matrix views are free reshapes.
//
// Gates act in the Kronecker convention: for sites (s1, s2, ...) in chain
// order the combined index is ((s1 * d2 + s2) * d3 + s3) ..., i.e. the
// leftmost site is most significant, matching Eigen::kroneckerProduct.
//
// Boundary bonds start at dimension 1. Retiring an edge site that is in
// isometric form leaves its bond open; the open index then purifies the
// retired part of the chain and all local observables stay exact.

#include <array>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "nmss/qubit.hpp"
#include "nmss/tensors.hpp"

namespace nmss {

struct Truncation {
  Eigen::Index max_bond = 32;
  /// Relative to the largest singular value of each split.
  double cutoff = 1e-10;
};

struct SiteTensor {
  Eigen::Index left = 1;
  Eigen::Index phys = 1;
  Eigen::Index right = 1;
  ComplexVector data;

  static SiteTensor zeros(Eigen::Index l, Eigen::Index p, Eigen::Index r);

  Eigen::Map<ComplexMatrix> left_grouped() { return {data.data(), left * phys, right}; }
  Eigen::Map<const ComplexMatrix> left_grouped() const { return {data.data(), left * phys, right}; }
  Eigen::Map<ComplexMatrix> right_grouped() { return {data.data(), left, phys * right}; }
  Eigen::Map<const ComplexMatrix> right_grouped() const { return {data.data(), left, phys * right}; }

  /// A^s as a left x right matrix.
  auto slice(Eigen::Index s) const { return left_grouped().middleRows(left * s, left); }
};

enum class CenterSide { Left, Right };

class MpsState {
 public:
  /// Label carried by the TLS site; bins carry their time index.
  static constexpr long kSystemLabel = std::numeric_limits<long>::min();

  /// TLS at site 0 in `system_state` (must be pure), followed by `n_bins`
  /// vacuum bins of dimension `d_bin`.
  static MpsState new_chain(std::size_t n_bins, Eigen::Index d_bin, const QubitDensityMatrix& system_state);

  /// Product state of normalized local vectors. `labels` defaults to the
  /// site positions, with `system_index` (if in range) labelled as the TLS.
  static MpsState product(const std::vector<ComplexVector>& local_states, std::size_t system_index,
                          std::vector<long> labels = {});

  std::size_t length() const { return sites_.size(); }
  Eigen::Index physical_dim(std::size_t site) const { return sites_.at(site).phys; }
  /// Bond b sits left of site b; bonds 0 and length() are the boundaries.
  Eigen::Index bond_dim(std::size_t bond) const;
  std::vector<Eigen::Index> bond_dimensions() const;
  Eigen::Index max_bond_dimension() const;

  std::size_t center() const { return center_; }
  std::size_t system_index() const;
  long label(std::size_t site) const { return labels_.at(site); }
  const std::vector<long>& labels() const { return labels_; }
  std::size_t find_label(long label) const;
  double cum_discarded() const { return cum_discarded_; }
  const SiteTensor& site(std::size_t i) const { return sites_.at(i); }

  /// Moves the orthogonality center with exact QR/LQ steps.
  void move_center(std::size_t target);

  /// Applies a two-site gate to (left_site, left_site+1). The center is first
  /// moved next to the pair; afterwards it sits on the requested side.
  /// Returns the discarded weight of the split.
  double apply_gate_adjacent(std::size_t left_site, const ComplexMatrix& gate, const Truncation& trunc,
                             CenterSide side = CenterSide::Right);

  /// Exchanges the physical contents (and labels) of sites i and i+1.
  double swap_adjacent(std::size_t i, const Truncation& trunc, CenterSide side = CenterSide::Right);

  /// Applies a gate to (first, first+1, first+2) and writes the three sites
  /// back in the order `output_order` (entry j names the input position that
  /// lands at position first+j). The center ends at first+center_offset.
  double apply_three_site_gate(std::size_t first, const ComplexMatrix& gate, const Truncation& trunc,
                               const std::array<int, 3>& output_order = {0, 1, 2}, int center_offset = 1);

  /// Inserts an unentangled site in `local_state` before position `pos`.
  void insert_product_site(std::size_t pos, const ComplexVector& local_state, long label);

  /// Drops the last site after making it a right isometry.
  void retire_right_edge();
  /// Drops the first site after making it a left isometry.
  void retire_left_edge();

  /// Normalized reduced density matrix of one site.
  ComplexMatrix reduced_density_matrix(std::size_t site) const;
  QubitDensityMatrix system_state() const;
  /// <n> on a bin site.
  double site_number_expectation(std::size_t site) const;
  double norm() const;

  /// Dense state vector in the Kronecker convention; boundary bonds must be 1.
  ComplexVector to_dense() const;

  /// Largest deviation from the left/right isometry conditions.
  double isometry_residual() const;

 private:
  double split_into(std::size_t first, std::size_t count, ComplexVector theta, const std::vector<Eigen::Index>& dims,
                    Eigen::Index left, Eigen::Index right, const Truncation& trunc, int center_offset);
  void check_site(std::size_t site, const char* what) const;

  std::vector<SiteTensor> sites_;
  std::vector<long> labels_;
  std::size_t center_ = 0;
  double cum_discarded_ = 0.0;
};

}  // namespace nmss
