#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace twoscale {

struct CgOptions {
  double relative_tolerance = 1e-10;
  std::size_t max_iterations = 5000;
};

struct CgResult {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

using LinearMap = std::function<void(std::span<const double>, std::span<double>)>;

/// Preconditioned conjugate gradients for a symmetric positive
/// (semi-)definite operator. `inverse_diagonal` may be empty. `x` holds the
/// initial guess on entry. Throws SolverError on non-convergence.
CgResult conjugate_gradient(const LinearMap& apply, std::span<const double> inverse_diagonal,
                            std::span<const double> rhs, std::span<double> x, const CgOptions& options = {});

}  // namespace twoscale
