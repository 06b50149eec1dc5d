#pragma once

#include <Eigen/SparseCore>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "twoscale/cg.hpp"
#include "twoscale/coefficient.hpp"
#include "twoscale/types.hpp"
#include "twoscale/wavelet.hpp"

namespace twoscale {

enum class TensorMode { full, sparse };
const char* to_string(TensorMode mode);

struct DofCounts {
  std::size_t u0 = 0;
  std::size_t u1_full = 0;
  std::size_t u1_sparse = 0;
  std::size_t full() const { return u0 + u1_full; }
  std::size_t sparse() const { return u0 + u1_sparse; }
};

/// Exact DOF counts of V^L_0 x V^L_1 (full) and V^L_0 x hat V^L_1 (sparse).
DofCounts count_dofs(int dim, int level);

/// Largest nodal work array the two-scale operator may allocate.
inline constexpr std::size_t kMaxNodalUnknowns = std::size_t{1} << 24;

/// Two-scale Galerkin space on D = (0,1)^d times the periodic cell Y.
///
/// u0 is expanded in tensor products of interval_h10 wavelets. u1 is
/// expanded in tensor products of interval_l2 wavelets in x and periodic
/// wavelets in y, omitting functions constant in y. The sparse mode keeps
/// the products whose x- and y-levels (maximum over axes) satisfy
/// lx + ly <= L.
class TwoScaleSpace {
 public:
  TwoScaleSpace(int dim, int level, TensorMode mode);

  int dim() const { return dim_; }
  int level() const { return level_; }
  TensorMode mode() const { return mode_; }
  std::size_t cells() const { return cells_at_level(level_); }
  double h() const { return mesh_width(level_); }

  const WaveletBasis1d& x_basis() const { return x_l2_; }
  const WaveletBasis1d& u0_basis() const { return x_h10_; }
  const WaveletBasis1d& y_basis() const { return y_per_; }

  std::size_t u0_size() const { return u0_size_; }
  std::size_t u1_size() const { return u1_pos_.size(); }
  std::size_t size() const { return u0_size_ + u1_pos_.size(); }

  /// Entries of the x- and y-coefficient tensors, (n+1)^d and n^d.
  std::size_t x_extent() const { return x_extent_; }
  std::size_t y_extent() const { return y_extent_; }
  /// Position of u1 dof k in the full (x-major) coefficient tensor.
  std::size_t u1_position(std::size_t k) const { return u1_pos_[k]; }
  /// -1 when the full-tensor position is not a dof of this space.
  std::int64_t dof_at_position(std::size_t pos) const { return pos_to_dof_[pos]; }

  /// Per-axis 1D indices of a flat x- or y-tensor position.
  std::array<std::size_t, 2> x_multi(std::size_t flat) const;
  std::array<std::size_t, 2> y_multi(std::size_t flat) const;
  int x_level(std::size_t flat) const;
  int y_level(std::size_t flat) const;
  bool y_is_constant(std::size_t flat) const;

 private:
  int dim_, level_;
  TensorMode mode_;
  WaveletBasis1d x_l2_, x_h10_, y_per_;
  std::size_t u0_size_ = 0, x_extent_ = 0, y_extent_ = 0;
  std::vector<std::size_t> u1_pos_;
  std::vector<std::int64_t> pos_to_dof_;
};

/// Maps coefficients of `coarse` into the dof numbering of `fine` (the
/// hierarchical bases are nested, so this is exact).
std::vector<double> embed_coefficients(const TwoScaleSpace& coarse, std::span<const double> coeffs,
                                       const TwoScaleSpace& fine);

/// Matrix-free two-scale operator B(z; ., .) in wavelet coordinates.
///
/// Per product element the coefficient is frozen at the element midpoint
/// and the Q1 x Q1 element integral is exact. Not thread safe (owns work
/// buffers); distinct instances may be used concurrently.
class TwoScaleOperator {
 public:
  TwoScaleOperator(const TwoScaleSpace& space, const TwoScaleCoefficient& coeff, const ParameterVector& z,
                   Execution exec = Execution::parallel);

  const TwoScaleSpace& space() const { return *space_; }
  std::size_t size() const { return space_->size(); }
  Execution execution() const { return exec_; }

  void apply(std::span<const double> in, std::span<double> out) const;
  /// Nodal element kernel alone: (U0, U1) -> (R0, R1) on the node arrays.
  void apply_nodal(std::span<const double> u0, std::span<const double> u1, std::span<double> r0,
                   std::span<double> r1) const;

  /// Inverse of the operator diagonal for A = 1, exact for the basis.
  const std::vector<double>& inverse_diagonal() const { return inv_diag_; }
  /// Load vector of the constant source f against the u0 basis.
  std::vector<double> load_vector(double f) const;

  /// Midpoint coefficient per product element, x-cell major.
  const std::vector<double>& element_coefficients() const { return a_elem_; }
  /// Reference element matrix for A = 1 on the local (u0, u1) dofs.
  const std::vector<double>& reference_element_matrix() const { return k_ref_; }

  /// Nodal arrays <-> wavelet coefficients.
  void coefficients_to_nodal(std::span<const double> coeffs, std::vector<double>& u0_nodal,
                             std::vector<double>& u1_nodal) const;

  std::size_t x_nodes() const { return x_nodes_; }
  std::size_t y_nodes() const { return y_nodes_; }

 private:
  void nodal_to_coefficients_transpose(std::span<const double> r0, std::span<const double> r1,
                                       std::span<double> out) const;

  const TwoScaleSpace* space_;
  Execution exec_;
  std::size_t x_nodes_ = 0, y_nodes_ = 0, x_cells_ = 0, y_cells_ = 0, local_ = 0;
  std::vector<double> a_elem_, k_ref_, inv_diag_;
  std::vector<std::uint32_t> x_corner_, y_corner_;
  mutable std::vector<double> u0n_, u1n_, r0n_, r1n_, full_;
};

/// Assembled sparse matrix of the same operator, built from direct basis
/// evaluation and per-element quadrature; the serial reference for tests.
Eigen::SparseMatrix<double> assemble_two_scale_matrix(const TwoScaleSpace& space, const TwoScaleCoefficient& coeff,
                                                      const ParameterVector& z);

struct TwoScaleSolution {
  int dim = 1;
  int level = 0;
  TensorMode mode = TensorMode::full;
  std::vector<double> coefficients;  // u0 block first, then u1
  std::vector<double> u0_nodal;      // (n+1)^d nodes, zero on the boundary
  std::vector<double> u1_nodal;      // (n+1)^d x-nodes times n^d y-nodes
  CgResult solver;

  std::size_t cells() const { return cells_at_level(level); }
  double u0_at(const Point& x) const;
  /// grad u0 on the x-cell containing x.
  std::array<double, 2> grad_u0(const Point& x) const;
  /// u1(x, .) at the y-nodes, linearly interpolated in x, shifted to zero
  /// mean over Y.
  std::vector<double> u1_slice(const Point& x) const;
};

struct TwoScaleSolveOptions {
  double source = 1.0;
  CgOptions cg{1e-10, 20000};
  Execution exec = Execution::parallel;
};

TwoScaleSolution solve_two_scale(const TwoScaleSpace& space, const TwoScaleCoefficient& coeff,
                                 const ParameterVector& z, const TwoScaleSolveOptions& options = {});

/// Energy norm sqrt(B(e, e)) of e = fine - coarse, measured with `op`
/// (built on the fine space).
double energy_difference(const TwoScaleOperator& op, const TwoScaleSolution& fine, const TwoScaleSpace& coarse_space,
                         const TwoScaleSolution& coarse);

/// CSV exports: "x,u0" (d = 1) or "x1,x2,u0"; "y,u1" or "y1,y2,u1".
std::string u0_csv(const TwoScaleSolution& sol);
std::string u1_slice_csv(const TwoScaleSolution& sol, const Point& x);

}  // namespace twoscale
