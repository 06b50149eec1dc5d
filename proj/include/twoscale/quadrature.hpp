#pragma once

#include <vector>

namespace twoscale {

/// Quadrature rule on the unit interval [0, 1].
struct Rule1d {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule mapped to [0, 1]; exact for degree 2n - 1.
Rule1d gauss_legendre(int n);

/// Composite rule: `panels` equal panels on [a, b], each with the n-point
/// Gauss rule.
Rule1d composite_gauss(double a, double b, int panels, int n);

/// Midpoint rule with m points on the periodic unit interval; spectrally
/// accurate for smooth periodic integrands.
Rule1d periodic_midpoint(int m);

}  // namespace twoscale
