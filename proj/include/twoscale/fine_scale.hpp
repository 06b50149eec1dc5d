#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "twoscale/cell_problem.hpp"
#include "twoscale/cg.hpp"
#include "twoscale/coefficient.hpp"
#include "twoscale/types.hpp"

namespace twoscale {

/// -div(A(z; x, x/eps) grad u) = f on (0,1)^d, u = 0 on the boundary, with
/// constant f and 1/eps an integer.
struct EpsilonProblem {
  const TwoScaleCoefficient* coeff = nullptr;
  ParameterVector z;
  double epsilon = 1.0;
  double source = 1.0;
  int resolution = 8;  // fine-mesh cells per eps-cell and axis (FEM only)

  /// Throws ConfigError unless 1/eps is a positive integer and resolution >= 8.
  void validate() const;
  std::size_t periods() const;
};

/// Integral over (0,1) of a function that oscillates on the eps-cells:
/// composite Gauss aligned with the cells, refined by doubling until two
/// successive values agree to `tolerance` (relative to max(1, |I|)).
double integrate_eps_aligned(const std::function<double(double)>& g, double epsilon, double tolerance = 1e-10);

/// Exact 1D reduction: a u' = C - f x with C fixed by u(0) = u(1) = 0.
class Eps1dSolution {
 public:
  Eps1dSolution(const EpsilonProblem& problem, double tolerance);

  const EpsilonProblem& problem() const { return problem_; }
  double flux_constant() const { return c_; }
  double coefficient(double x) const;
  double gradient(double x) const { return flux(x) / coefficient(x); }
  double flux(double x) const { return c_ - problem_.source * x; }
  /// u(x) by eps-aligned quadrature of u' over (0, x).
  double value(double x) const;
  double integrate(const std::function<double(double)>& g) const {
    return integrate_eps_aligned(g, problem_.epsilon, tolerance_);
  }

 private:
  EpsilonProblem problem_;
  double tolerance_;
  double c_ = 0.0;
};

Eps1dSolution solve_eps_1d_exact(const EpsilonProblem& problem, double tolerance = 1e-10);

/// Largest fine mesh accepted by solve_eps_fem, in nodes per axis (2D).
inline constexpr std::size_t kMaxFineNodesPerAxis = 1025;

/// Q1 nodal solution on the uniform fine mesh (n cells per axis).
struct FineFemSolution {
  int dim = 1;
  std::size_t n = 1;
  std::vector<double> nodal;
  CgResult solver;

  double value(const Point& x) const;
  std::array<double, 2> gradient(const Point& x) const;
};

/// Standard Galerkin solve with the coefficient at element midpoints.
FineFemSolution solve_eps_fem(const EpsilonProblem& problem, const CgOptions& cg = {1e-10, 100000},
                              Execution exec = Execution::parallel);

/// (x, y) -> grad u0(x) + grad_y u1(x, y).
using TwoScaleGradient = std::function<std::array<double, 2>(const Point&, const Point&)>;
using GradientFunction = std::function<std::array<double, 2>(const Point&)>;

/// grad u0 + sum_l d_l u0 grad_y w^l from a macro gradient and cell solutions.
TwoScaleGradient corrector_gradient(GradientFunction grad_u0, const CellSolutionSet& cells);

/// || grad u^eps - (grad u0 + grad_y u1(., ./eps)) ||_{L2(D)}.
/// The 1D version uses `panels_per_cell` 3-point Gauss panels per eps-cell;
/// choose it so that panel ends contain every kink of the integrand.
double corrector_error(const Eps1dSolution& reference, const TwoScaleGradient& two_scale,
                       std::size_t panels_per_cell);
/// 2D version: 3 x 3 Gauss points per fine element.
double corrector_error(const FineFemSolution& reference, const TwoScaleGradient& two_scale, double epsilon);

/// Least-squares slope of log y against log x with its standard error.
struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
};
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct RateRow {
  double epsilon = 0.0;
  double error = 0.0;
  double h_fine = 0.0;
  int two_scale_level = 0;
};

/// "epsilon,corrector_error,h_fine,L_two_scale,slope_estimate"; the slope
/// column holds the local slope against the previous row (nan in the first).
std::string rate_study_csv(const std::vector<RateRow>& rows);

}  // namespace twoscale
