#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace twoscale {

/// Number of cells per axis of the level-L mesh; h_L = 2^{-(L+1)}.
inline std::size_t cells_at_level(int level) { return std::size_t{2} << level; }
inline double mesh_width(int level) { return 1.0 / static_cast<double>(cells_at_level(level)); }

/// Piecewise linear hierarchical wavelet bases on [0, 1].
///
///   interval_l2   basis of V^L (all nodes), L2-normalized
///   interval_h10  basis of V^L_0 (interior nodes), H1-normalized
///   periodic      constant + H1-normalized wavelets of V^L_#; every wavelet
///                 vanishes at y = 0, so index 0 (the constant) is the only
///                 function not in H^1_#/R's gauge-fixed complement
///
/// Functions are ordered level by level (level 0 first), so the index of a
/// function does not depend on the finest level L.
enum class WaveletKind { interval_l2, interval_h10, periodic };

class WaveletBasis1d {
 public:
  WaveletBasis1d(WaveletKind kind, int finest_level);

  WaveletKind kind() const { return kind_; }
  int finest_level() const { return level_; }
  /// Number of basis functions (= number of nodal unknowns).
  std::size_t size() const { return size_; }
  /// Number of nodal values exchanged by the transforms: n + 1 for
  /// interval_l2, n - 1 interior nodes for interval_h10, n for periodic.
  std::size_t nodal_size() const { return size_; }

  static std::size_t level_offset(WaveletKind kind, int level);
  static std::size_t level_count(WaveletKind kind, int level);
  int level_of(std::size_t index) const;

  /// Scale factor applied to the unit-height stencils at `level`.
  static double level_scale(WaveletKind kind, int level);

  /// Values of basis function `index` at the nodes of its own level mesh
  /// (n_l + 1 entries, periodic node n_l duplicating node 0).
  std::vector<double> own_level_values(std::size_t index) const;
  /// Values at the nodes of the finest mesh (n + 1 entries), computed by
  /// direct evaluation rather than through the transform.
  std::vector<double> fine_nodal_values(std::size_t index) const;
  /// Point evaluation of basis function `index`.
  double eval(std::size_t index, double t) const;

  /// Exact integral of psi^2 and (psi')^2 over (0, 1).
  double mass(std::size_t index) const;
  double stiffness(std::size_t index) const;

  /// coefficients -> nodal values (size() each); O(n). Thread safe.
  void to_nodal(std::span<const double> coeffs, std::span<double> nodal) const;
  /// Exact transpose of to_nodal.
  void to_nodal_transpose(std::span<const double> nodal, std::span<double> coeffs) const;

 private:
  WaveletKind kind_;
  int level_;
  std::size_t size_;
  std::vector<double> mass_, stiffness_;
};

/// Applies the 1D transform along one axis of a row-major array. `shape`
/// lists the extents; the extent of `axis` must equal basis.size(). Lines
/// are distributed over OpenMP threads when `parallel` is set; the result
/// does not depend on the thread count.
void transform_axis(const WaveletBasis1d& basis, std::span<double> data, std::span<const std::size_t> shape,
                    int axis, bool transpose, bool parallel);

}  // namespace twoscale
