#pragma once

#include <array>
#include <string>
#include <vector>

#include "twoscale/cg.hpp"
#include "twoscale/coefficient.hpp"
#include "twoscale/types.hpp"

namespace twoscale {

/// Tensor grid of macroscopic points on the closed box [0, 1]^d, row-major.
struct MacroGrid {
  int dim = 1;
  std::size_t intervals = 1;  // per axis

  std::size_t points_per_axis() const { return intervals + 1; }
  std::size_t size() const { return dim == 1 ? intervals + 1 : (intervals + 1) * (intervals + 1); }
  double spacing() const { return 1.0 / static_cast<double>(intervals); }
  Point point(std::size_t k) const;
  std::vector<Point> points() const;

  /// Grid points surrounding x with multilinear interpolation weights
  /// (2^d entries, weights summing to one).
  struct Stencil {
    std::array<std::size_t, 4> index{};
    std::array<double, 4> weight{};
    int count = 0;
  };
  Stencil interpolation(const Point& x) const;
};

struct CellSolveOptions {
  CgOptions cg{1e-12, 200000};
  Execution exec = Execution::parallel;
};

/// Discrete cell solutions w^l(x_k, .) on the periodic Q1 mesh of level
/// L_cell (2^{L_cell+1} cells per axis), normalized to zero mean.
class CellSolutionSet {
 public:
  int dim() const { return dim_; }
  int level() const { return level_; }
  std::size_t cells() const { return cells_; }
  std::size_t nodes() const { return nodes_; }
  const MacroGrid& grid() const { return grid_; }

  /// Nodal values of w^l at macro point k (row-major over y-nodes).
  const std::vector<double>& w(std::size_t k, int l) const { return w_[k * dim_ + l]; }
  /// Coefficient values per Y-cell (cell midpoints) at macro point k.
  const std::vector<double>& cell_coefficients(std::size_t k) const { return a_[k]; }

  /// w^l(x, y) and grad_y w^l(x, y), multilinear in x between grid points.
  double value(int l, const Point& x, const Point& y) const;
  std::array<double, 2> grad_y(int l, const Point& x, const Point& y) const;

  std::size_t max_iterations() const { return max_iterations_; }
  double max_residual() const { return max_residual_; }

 private:
  friend CellSolutionSet solve_cell_problems(const TwoScaleCoefficient&, const ParameterVector&, const MacroGrid&,
                                             int, const CellSolveOptions&);
  double value_at(std::size_t k, int l, const Point& y) const;
  std::array<double, 2> grad_at(std::size_t k, int l, const Point& y) const;

  int dim_ = 1, level_ = 0;
  std::size_t cells_ = 0, nodes_ = 0;
  MacroGrid grid_;
  std::vector<std::vector<double>> w_;
  std::vector<std::vector<double>> a_;
  std::size_t max_iterations_ = 0;
  double max_residual_ = 0.0;
};

/// Solves  -div_y(A (e_l + grad_y w^l)) = 0  on the periodic cell for each
/// grid point and direction. The coefficient is frozen at cell midpoints.
CellSolutionSet solve_cell_problems(const TwoScaleCoefficient& coeff, const ParameterVector& z, const MacroGrid& grid,
                                    int cell_level, const CellSolveOptions& options = {});

/// A0(z; x) on the macro grid; entries stored row-major (d x d).
class HomogenizedTensorField {
 public:
  HomogenizedTensorField(MacroGrid grid, std::vector<std::array<double, 4>> values);

  int dim() const { return grid_.dim; }
  const MacroGrid& grid() const { return grid_; }
  const std::array<double, 4>& at_point(std::size_t k) const { return values_[k]; }
  /// Multilinear interpolation in x; entry (k, l) at index k * 2 + l.
  std::array<double, 4> at(const Point& x) const;

 private:
  MacroGrid grid_;
  std::vector<std::array<double, 4>> values_;
};

/// A0_{kl} = int_Y A (e_k + grad w^k) . (e_l + grad w^l) dy, exact for the
/// piecewise constant coefficient and Q1 cell solutions.
HomogenizedTensorField homogenized_tensor(const TwoScaleCoefficient& coeff, const ParameterVector& z,
                                          const CellSolutionSet& cells);

/// u1(x, y) = sum_l g_l(x) w^l(x, y) with g = grad u0 sampled on the cell
/// grid and interpolated multilinearly.
class CorrectorField {
 public:
  CorrectorField(const CellSolutionSet& cells, std::vector<std::array<double, 2>> grad_u0);

  double value(const Point& x, const Point& y) const;
  std::array<double, 2> grad_y(const Point& x, const Point& y) const;

  /// Same with an explicitly supplied grad u0(x).
  static double value(const CellSolutionSet& cells, const std::array<double, 2>& g, const Point& x, const Point& y);
  static std::array<double, 2> grad_y(const CellSolutionSet& cells, const std::array<double, 2>& g, const Point& x,
                                      const Point& y);

 private:
  std::array<double, 2> gradient_at(const Point& x) const;

  const CellSolutionSet* cells_;
  std::vector<std::array<double, 2>> grad_;
};

/// "x,a0_11" (d = 1) or "x1,x2,a0_11,a0_12,a0_21,a0_22".
std::string homogenized_tensor_csv(const HomogenizedTensorField& field);
/// "y,w1" or "y1,y2,w1,w2" at macro point k.
std::string cell_solution_csv(const CellSolutionSet& cells, std::size_t k);

}  // namespace twoscale
