#include "twoscale/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace twoscale {

Rule1d gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  Rule1d rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n from the Chebyshev initial guess.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // map [-1, 1] -> [0, 1]
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

Rule1d composite_gauss(double a, double b, int panels, int n) {
  if (panels < 1) throw std::invalid_argument("composite_gauss: panels must be >= 1");
  const Rule1d ref = gauss_legendre(n);
  Rule1d rule;
  rule.nodes.reserve(static_cast<std::size_t>(panels) * n);
  rule.weights.reserve(static_cast<std::size_t>(panels) * n);
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double left = a + p * h;
    for (int q = 0; q < n; ++q) {
      rule.nodes.push_back(left + h * ref.nodes[q]);
      rule.weights.push_back(h * ref.weights[q]);
    }
  }
  return rule;
}

Rule1d periodic_midpoint(int m) {
  if (m < 1) throw std::invalid_argument("periodic_midpoint: m must be >= 1");
  Rule1d rule;
  rule.nodes.resize(m);
  rule.weights.assign(m, 1.0 / m);
  for (int i = 0; i < m; ++i) rule.nodes[i] = (i + 0.5) / m;
  return rule;
}

}  // namespace twoscale
