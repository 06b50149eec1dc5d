#include "twoscale/homogenized.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

#include "q1_element.hpp"
#include "twoscale/csv.hpp"
#include "twoscale/wavelet.hpp"

namespace twoscale {
namespace {

std::pair<std::size_t, double> locate(double t, std::size_t n) {
  const double u = std::clamp(t, 0.0, 1.0) * static_cast<double>(n);
  const std::size_t c = std::min(static_cast<std::size_t>(u), n - 1);
  return {c, u - static_cast<double>(c)};
}

}  // namespace

std::size_t MacroField::cells() const { return cells_at_level(level); }

double MacroField::value(const Point& x) const {
  const std::size_t n = cells();
  const auto [c0, s0] = locate(x[0], n);
  if (dim == 1) return (1 - s0) * nodal[c0] + s0 * nodal[c0 + 1];
  const auto [c1, s1] = locate(x[1], n);
  auto at = [&](std::size_t i, std::size_t j) { return nodal[i * (n + 1) + j]; };
  return (1 - s0) * (1 - s1) * at(c0, c1) + s0 * (1 - s1) * at(c0 + 1, c1) + (1 - s0) * s1 * at(c0, c1 + 1) +
         s0 * s1 * at(c0 + 1, c1 + 1);
}

std::array<double, 2> MacroField::gradient(const Point& x) const {
  const std::size_t n = cells();
  const double inv_h = static_cast<double>(n);
  const auto [c0, s0] = locate(x[0], n);
  if (dim == 1) return {(nodal[c0 + 1] - nodal[c0]) * inv_h, 0.0};
  const auto [c1, s1] = locate(x[1], n);
  auto at = [&](std::size_t i, std::size_t j) { return nodal[i * (n + 1) + j]; };
  return {((1 - s1) * (at(c0 + 1, c1) - at(c0, c1)) + s1 * (at(c0 + 1, c1 + 1) - at(c0, c1 + 1))) * inv_h,
          ((1 - s0) * (at(c0, c1 + 1) - at(c0, c1)) + s0 * (at(c0 + 1, c1 + 1) - at(c0 + 1, c1))) * inv_h};
}

MacroField solve_homogenized(const TensorFunction& a0, int dim, int level, double source) {
  if (dim != 1 && dim != 2) throw DimensionError("solve_homogenized: dimension must be 1 or 2");
  const std::size_t n = cells_at_level(level);
  const double h = 1.0 / static_cast<double>(n);
  const std::size_t m = n + 1;
  const std::size_t nodes = dim == 1 ? m : m * m;
  const unsigned nc = 1u << dim;

  // Interior numbering.
  std::vector<std::ptrdiff_t> id(nodes, -1);
  std::ptrdiff_t count = 0;
  for (std::size_t k = 0; k < nodes; ++k) {
    const std::size_t i0 = dim == 1 ? k : k / m, i1 = dim == 1 ? 1 : k % m;
    if (i0 > 0 && i0 < n && i1 > 0 && i1 < n) id[k] = count++;
  }

  const detail::Q1Reference ref(dim, h);

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(count);
  const std::size_t cells = dim == 1 ? n : n * n;
  for (std::size_t e = 0; e < cells; ++e) {
    const std::size_t o0 = dim == 1 ? e : e / n, o1 = dim == 1 ? 0 : e % n;
    const Point mid = make_point((o0 + 0.5) * h, (o1 + 0.5) * h);
    const auto t = a0(mid);
    std::ptrdiff_t dof[4];
    for (unsigned a = 0; a < nc; ++a) {
      const std::size_t i0 = o0 + (a & 1u), i1 = o1 + ((a >> 1) & 1u);
      dof[a] = id[dim == 1 ? i0 : i0 * m + i1];
    }
    for (unsigned a = 0; a < nc; ++a) {
      if (dof[a] < 0) continue;
      rhs[dof[a]] += source * std::pow(h, dim) / nc;
      for (unsigned b = 0; b < nc; ++b) {
        if (dof[b] < 0) continue;
        double v = 0.0;
        for (std::size_t q = 0; q < ref.points; ++q)
          for (int p = 0; p < dim; ++p)
            for (int r = 0; r < dim; ++r) v += ref.weight[q] * t[p * 2 + r] * ref.grad[q][p][a] * ref.grad[q][r][b];
        trip.emplace_back(dof[a], dof[b], v);
      }
    }
  }
  Eigen::SparseMatrix<double> k(count, count);
  k.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(k);
  if (ldlt.info() != Eigen::Success) throw NumericalError("solve_homogenized: factorization failed (tensor not SPD?)");
  const Eigen::VectorXd u = ldlt.solve(rhs);
  if (!u.allFinite()) throw NumericalError("solve_homogenized: non-finite solution");

  MacroField out;
  out.dim = dim;
  out.level = level;
  out.nodal.assign(nodes, 0.0);
  for (std::size_t k2 = 0; k2 < nodes; ++k2)
    if (id[k2] >= 0) out.nodal[k2] = u[id[k2]];
  return out;
}

MacroField solve_homogenized(const HomogenizedTensorField& a0, int level, double source) {
  return solve_homogenized([&a0](const Point& x) { return a0.at(x); }, a0.dim(), level, source);
}

std::string macro_field_csv(const MacroField& u) {
  const std::size_t n = u.cells();
  const double h = 1.0 / static_cast<double>(n);
  if (u.dim == 1) {
    CsvWriter w({"x", "u0"});
    for (std::size_t i = 0; i <= n; ++i) w.row({i * h, u.nodal[i]});
    return w.str();
  }
  CsvWriter w({"x1", "x2", "u0"});
  for (std::size_t i = 0; i <= n; ++i)
    for (std::size_t j = 0; j <= n; ++j) w.row({i * h, j * h, u.nodal[i * (n + 1) + j]});
  return w.str();
}

}  // namespace twoscale
