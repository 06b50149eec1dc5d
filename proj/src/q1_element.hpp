#pragma once

#include <array>
#include <cmath>

#include "twoscale/quadrature.hpp"

namespace twoscale::detail {

// Q1 element [0,h]^d (d <= 2) with the tensor 2-point Gauss rule, which
// integrates products of Q1 gradients and values exactly. Corner a has
// bit i set when it sits at the upper end of axis i.
struct Q1Reference {
  int dim;
  unsigned corners;
  std::size_t points;
  std::array<std::array<double, 2>, 4> local{};       // Gauss points in [0,1]^d
  std::array<double, 4> weight{};                       // includes the volume h^d
  std::array<std::array<double, 4>, 4> value{};         // [q][a]
  std::array<std::array<std::array<double, 4>, 2>, 4> grad{};  // [q][p][a]
  std::array<std::array<double, 4>, 4> stiffness{};     // unit coefficient

  Q1Reference(int d, double h) : dim(d), corners(1u << d), points(std::size_t{1} << d) {
    const Rule1d g = gauss_legendre(2);
    for (std::size_t q = 0; q < points; ++q) {
      weight[q] = std::pow(h, d);
      for (int i = 0; i < d; ++i) {
        const std::size_t bit = (q >> i) & 1u;
        local[q][i] = g.nodes[bit];
        weight[q] *= g.weights[bit];
      }
      for (unsigned a = 0; a < corners; ++a) {
        double v = 1.0;
        for (int i = 0; i < d; ++i) v *= ((a >> i) & 1u) ? local[q][i] : 1.0 - local[q][i];
        value[q][a] = v;
        for (int p = 0; p < d; ++p) {
          double gv = 1.0 / h;
          for (int i = 0; i < d; ++i) {
            const bool upper = (a >> i) & 1u;
            gv *= i == p ? (upper ? 1.0 : -1.0) : (upper ? local[q][i] : 1.0 - local[q][i]);
          }
          grad[q][p][a] = gv;
        }
      }
    }
    for (unsigned a = 0; a < corners; ++a)
      for (unsigned b = 0; b < corners; ++b) {
        double v = 0.0;
        for (std::size_t q = 0; q < points; ++q)
          for (int p = 0; p < d; ++p) v += weight[q] * grad[q][p][a] * grad[q][p][b];
        stiffness[a][b] = v;
      }
  }
};

}  // namespace twoscale::detail
