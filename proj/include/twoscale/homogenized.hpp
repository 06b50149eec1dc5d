#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "twoscale/cell_problem.hpp"
#include "twoscale/types.hpp"

namespace twoscale {

/// Q1 nodal field on the level-L mesh of D = (0,1)^d, zero on the boundary.
struct MacroField {
  int dim = 1;
  int level = 0;
  std::vector<double> nodal;  // (n+1)^d, row-major

  std::size_t cells() const;
  double value(const Point& x) const;
  /// Gradient on the cell containing x.
  std::array<double, 2> gradient(const Point& x) const;
};

/// x -> symmetric d x d tensor, row-major in a 2 x 2 array.
using TensorFunction = std::function<std::array<double, 4>(const Point&)>;

/// Galerkin solution of -div(A0 grad u0) = f with u0 = 0 on the boundary;
/// A0 is frozen at element midpoints. Direct sparse Cholesky.
MacroField solve_homogenized(const TensorFunction& a0, int dim, int level, double source = 1.0);
MacroField solve_homogenized(const HomogenizedTensorField& a0, int level, double source = 1.0);

/// "x,u0" or "x1,x2,u0" on the mesh nodes.
std::string macro_field_csv(const MacroField& u);

}  // namespace twoscale
