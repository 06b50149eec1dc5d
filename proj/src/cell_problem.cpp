#include "twoscale/cell_problem.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "q1_element.hpp"
#include "twoscale/csv.hpp"
#include "twoscale/wavelet.hpp"

namespace twoscale {
namespace {

// Periodic Q1 mesh on Y with n cells per axis.
struct PeriodicMesh {
  int dim;
  std::size_t n, cells, nodes, npts = 0;
  unsigned corners;
  std::vector<std::uint32_t> corner;  // cells x corners
  std::vector<double> k_ref;          // corners x corners, unit coefficient
  std::vector<double> g_ref;          // dim x corners: int_e d_l phi_a
  // Gauss-point gradients for the tensor integral: points x dim x corners.
  std::vector<double> gauss_grad, gauss_weight;

  PeriodicMesh(int d, std::size_t cells_per_axis) : dim(d), n(cells_per_axis) {
    cells = d == 1 ? n : n * n;
    nodes = cells;
    corners = 1u << d;
    const double h = 1.0 / static_cast<double>(n);
    corner.resize(cells * corners);
    for (std::size_t e = 0; e < cells; ++e) {
      const std::size_t o0 = d == 1 ? e : e / n, o1 = d == 1 ? 0 : e % n;
      for (unsigned a = 0; a < corners; ++a) {
        const std::size_t i0 = (o0 + (a & 1u)) % n;
        const std::size_t i1 = (o1 + ((a >> 1) & 1u)) % n;
        corner[e * corners + a] = static_cast<std::uint32_t>(d == 1 ? i0 : i0 * n + i1);
      }
    }
    const detail::Q1Reference ref(d, h);
    npts = ref.points;
    gauss_grad.assign(npts * d * corners, 0.0);
    gauss_weight.assign(npts, 0.0);
    k_ref.assign(corners * corners, 0.0);
    g_ref.assign(d * corners, 0.0);
    for (std::size_t q = 0; q < npts; ++q) {
      gauss_weight[q] = ref.weight[q];
      for (int p = 0; p < d; ++p)
        for (unsigned a = 0; a < corners; ++a) {
          gauss_grad[(q * d + p) * corners + a] = ref.grad[q][p][a];
          g_ref[p * corners + a] += ref.weight[q] * ref.grad[q][p][a];
        }
    }
    for (unsigned a = 0; a < corners; ++a)
      for (unsigned b = 0; b < corners; ++b) k_ref[a * corners + b] = ref.stiffness[a][b];
  }

  void apply(const std::vector<double>& a_cell, std::span<const double> u, std::span<double> r) const {
    std::fill(r.begin(), r.end(), 0.0);
    for (std::size_t e = 0; e < cells; ++e) {
      const std::uint32_t* c = &corner[e * corners];
      double loc[4];
      for (unsigned a = 0; a < corners; ++a) loc[a] = u[c[a]];
      for (unsigned a = 0; a < corners; ++a) {
        double v = 0.0;
        for (unsigned b = 0; b < corners; ++b) v += k_ref[a * corners + b] * loc[b];
        r[c[a]] += a_cell[e] * v;
      }
    }
  }
};

std::vector<Point> cell_midpoints(int dim, std::size_t n) {
  std::vector<Point> pts;
  const double h = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (dim == 1) {
      pts.push_back(make_point((i + 0.5) * h));
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) pts.push_back(make_point((i + 0.5) * h, (j + 0.5) * h));
  }
  return pts;
}

}  // namespace

Point MacroGrid::point(std::size_t k) const {
  const double h = spacing();
  if (dim == 1) return make_point(static_cast<double>(k) * h);
  const std::size_t m = points_per_axis();
  return make_point(static_cast<double>(k / m) * h, static_cast<double>(k % m) * h);
}

std::vector<Point> MacroGrid::points() const {
  std::vector<Point> out(size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = point(k);
  return out;
}

MacroGrid::Stencil MacroGrid::interpolation(const Point& x) const {
  Stencil st;
  std::size_t idx[2] = {0, 0};
  double s[2] = {0, 0};
  for (int i = 0; i < dim; ++i) {
    const double t = std::clamp(x[i], 0.0, 1.0) * static_cast<double>(intervals);
    idx[i] = std::min(static_cast<std::size_t>(t), intervals - 1);
    s[i] = t - static_cast<double>(idx[i]);
  }
  const std::size_t m = points_per_axis();
  st.count = 1 << dim;
  for (int a = 0; a < st.count; ++a) {
    const std::size_t i0 = idx[0] + (a & 1), i1 = idx[1] + ((a >> 1) & 1);
    st.index[a] = dim == 1 ? i0 : i0 * m + i1;
    st.weight[a] = ((a & 1) ? s[0] : 1 - s[0]) * (dim == 2 ? (((a >> 1) & 1) ? s[1] : 1 - s[1]) : 1.0);
  }
  return st;
}

CellSolutionSet solve_cell_problems(const TwoScaleCoefficient& coeff, const ParameterVector& z, const MacroGrid& grid,
                                    int cell_level, const CellSolveOptions& options) {
  if (coeff.dim() != grid.dim) throw DimensionError("solve_cell_problems: coefficient and grid dimensions differ");
  if (cell_level < 0) throw DimensionError("solve_cell_problems: cell level must be >= 0");
  const int d = grid.dim;
  const PeriodicMesh mesh(d, cells_at_level(cell_level));
  CellSolutionSet set;
  set.dim_ = d;
  set.level_ = cell_level;
  set.cells_ = mesh.n;
  set.nodes_ = mesh.nodes;
  set.grid_ = grid;
  const std::size_t np = grid.size();
  set.w_.assign(np * d, {});
  set.a_.assign(np, {});

  const CoefficientTable table(coeff, grid.points(), cell_midpoints(d, mesh.n));
  std::vector<std::size_t> iterations(np * d, 0);
  std::vector<double> residuals(np * d, 0.0);
  std::exception_ptr failure;
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(np);

#pragma omp parallel for schedule(dynamic) if (options.exec == Execution::parallel)
  for (std::ptrdiff_t kk = 0; kk < count; ++kk) {
    try {
      const std::size_t k = static_cast<std::size_t>(kk);
      std::vector<double> a(mesh.cells);
      table.evaluate_row(z, k, a);
      std::vector<double> inv_diag(mesh.nodes, 0.0);
      for (std::size_t e = 0; e < mesh.cells; ++e)
        for (unsigned c = 0; c < mesh.corners; ++c)
          inv_diag[mesh.corner[e * mesh.corners + c]] += a[e] * mesh.k_ref[c * mesh.corners + c];
      for (double& v : inv_diag) v = 1.0 / v;
      const LinearMap op = [&](std::span<const double> in, std::span<double> out) { mesh.apply(a, in, out); };
      for (int l = 0; l < d; ++l) {
        std::vector<double> rhs(mesh.nodes, 0.0);
        for (std::size_t e = 0; e < mesh.cells; ++e)
          for (unsigned c = 0; c < mesh.corners; ++c)
            rhs[mesh.corner[e * mesh.corners + c]] -= a[e] * mesh.g_ref[l * mesh.corners + c];
        // The system is singular with constant kernel; keep it consistent.
        const double rmean = std::accumulate(rhs.begin(), rhs.end(), 0.0) / static_cast<double>(rhs.size());
        for (double& v : rhs) v -= rmean;
        std::vector<double> w(mesh.nodes, 0.0);
        const CgResult res = conjugate_gradient(op, inv_diag, rhs, w, options.cg);
        const double wmean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
        for (double& v : w) v -= wmean;
        iterations[k * d + l] = res.iterations;
        residuals[k * d + l] = res.relative_residual;
        set.w_[k * d + l] = std::move(w);
      }
      set.a_[k] = std::move(a);
    } catch (...) {
#pragma omp critical(cell_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  set.max_iterations_ = *std::max_element(iterations.begin(), iterations.end());
  set.max_residual_ = *std::max_element(residuals.begin(), residuals.end());
  return set;
}

double CellSolutionSet::value_at(std::size_t k, int l, const Point& y) const {
  double s[2] = {0, 0};
  std::size_t idx[2] = {0, 0};
  for (int i = 0; i < dim_; ++i) {
    const double t = (y[i] - std::floor(y[i])) * static_cast<double>(cells_);
    idx[i] = std::min(static_cast<std::size_t>(t), cells_ - 1);
    s[i] = t - static_cast<double>(idx[i]);
  }
  const auto& w = w_[k * dim_ + l];
  const std::size_t n = cells_;
  if (dim_ == 1) return (1 - s[0]) * w[idx[0]] + s[0] * w[(idx[0] + 1) % n];
  const std::size_t i0 = idx[0], i1 = idx[1], j0 = (i0 + 1) % n, j1 = (i1 + 1) % n;
  return (1 - s[0]) * (1 - s[1]) * w[i0 * n + i1] + s[0] * (1 - s[1]) * w[j0 * n + i1] +
         (1 - s[0]) * s[1] * w[i0 * n + j1] + s[0] * s[1] * w[j0 * n + j1];
}

std::array<double, 2> CellSolutionSet::grad_at(std::size_t k, int l, const Point& y) const {
  double s[2] = {0, 0};
  std::size_t idx[2] = {0, 0};
  for (int i = 0; i < dim_; ++i) {
    const double t = (y[i] - std::floor(y[i])) * static_cast<double>(cells_);
    idx[i] = std::min(static_cast<std::size_t>(t), cells_ - 1);
    s[i] = t - static_cast<double>(idx[i]);
  }
  const auto& w = w_[k * dim_ + l];
  const std::size_t n = cells_;
  const double inv_h = static_cast<double>(n);
  if (dim_ == 1) return {(w[(idx[0] + 1) % n] - w[idx[0]]) * inv_h, 0.0};
  const std::size_t i0 = idx[0], i1 = idx[1], j0 = (i0 + 1) % n, j1 = (i1 + 1) % n;
  const double w00 = w[i0 * n + i1], w10 = w[j0 * n + i1], w01 = w[i0 * n + j1], w11 = w[j0 * n + j1];
  return {((1 - s[1]) * (w10 - w00) + s[1] * (w11 - w01)) * inv_h,
          ((1 - s[0]) * (w01 - w00) + s[0] * (w11 - w10)) * inv_h};
}

double CellSolutionSet::value(int l, const Point& x, const Point& y) const {
  const auto st = grid_.interpolation(x);
  double v = 0.0;
  for (int a = 0; a < st.count; ++a)
    if (st.weight[a] != 0.0) v += st.weight[a] * value_at(st.index[a], l, y);
  return v;
}

std::array<double, 2> CellSolutionSet::grad_y(int l, const Point& x, const Point& y) const {
  const auto st = grid_.interpolation(x);
  std::array<double, 2> g{0.0, 0.0};
  for (int a = 0; a < st.count; ++a) {
    if (st.weight[a] == 0.0) continue;
    const auto ga = grad_at(st.index[a], l, y);
    g[0] += st.weight[a] * ga[0];
    g[1] += st.weight[a] * ga[1];
  }
  return g;
}

HomogenizedTensorField::HomogenizedTensorField(MacroGrid grid, std::vector<std::array<double, 4>> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw DimensionError("HomogenizedTensorField: one tensor per grid point required");
}

std::array<double, 4> HomogenizedTensorField::at(const Point& x) const {
  const auto st = grid_.interpolation(x);
  std::array<double, 4> out{};
  for (int a = 0; a < st.count; ++a)
    for (int i = 0; i < 4; ++i) out[i] += st.weight[a] * values_[st.index[a]][i];
  return out;
}

HomogenizedTensorField homogenized_tensor(const TwoScaleCoefficient& coeff, const ParameterVector& z,
                                          const CellSolutionSet& cells) {
  if (coeff.dim() != cells.dim()) throw DimensionError("homogenized_tensor: dimension mismatch");
  const int d = cells.dim();
  const PeriodicMesh mesh(d, cells.cells());
  const std::size_t np = cells.grid().size();
  // The stored cell coefficients must come from the same (coeff, z).
  const CoefficientTable probe(coeff, {cells.grid().point(0)}, cell_midpoints(d, mesh.n));
  std::vector<double> a0(mesh.cells);
  probe.evaluate_row(z, 0, a0);
  const auto& stored = cells.cell_coefficients(0);
  for (std::size_t e = 0; e < mesh.cells; ++e)
    if (std::abs(a0[e] - stored[e]) > 1e-12 * std::abs(stored[e]))
      throw DimensionError("homogenized_tensor: cell solutions belong to a different coefficient or parameter");

  std::vector<std::array<double, 4>> values(np);
  const std::size_t npts = mesh.npts;
  for (std::size_t k = 0; k < np; ++k) {
    const auto& a = cells.cell_coefficients(k);
    std::array<double, 4> acc{};
    for (std::size_t e = 0; e < mesh.cells; ++e) {
      const std::uint32_t* c = &mesh.corner[e * mesh.corners];
      for (std::size_t q = 0; q < npts; ++q) {
        // Columns: e_l + grad w^l at this Gauss point.
        double col[2][2] = {{0, 0}, {0, 0}};
        for (int l = 0; l < d; ++l) {
          const auto& w = cells.w(k, l);
          for (int p = 0; p < d; ++p) {
            const double* gr = &mesh.gauss_grad[(q * d + p) * mesh.corners];
            double v = p == l ? 1.0 : 0.0;
            for (unsigned b = 0; b < mesh.corners; ++b) v += gr[b] * w[c[b]];
            col[l][p] = v;
          }
        }
        const double wq = a[e] * mesh.gauss_weight[q];
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            double v = 0.0;
            for (int p = 0; p < d; ++p) v += col[i][p] * col[j][p];
            acc[i * 2 + j] += wq * v;
          }
      }
    }
    if (d == 2) acc[1] = acc[2] = 0.5 * (acc[1] + acc[2]);
    values[k] = acc;
  }
  return HomogenizedTensorField(cells.grid(), std::move(values));
}

CorrectorField::CorrectorField(const CellSolutionSet& cells, std::vector<std::array<double, 2>> grad_u0)
    : cells_(&cells), grad_(std::move(grad_u0)) {
  if (grad_.size() != cells.grid().size()) throw DimensionError("CorrectorField: one gradient per grid point required");
}

std::array<double, 2> CorrectorField::gradient_at(const Point& x) const {
  const auto st = cells_->grid().interpolation(x);
  std::array<double, 2> g{0.0, 0.0};
  for (int a = 0; a < st.count; ++a) {
    g[0] += st.weight[a] * grad_[st.index[a]][0];
    g[1] += st.weight[a] * grad_[st.index[a]][1];
  }
  return g;
}

double CorrectorField::value(const Point& x, const Point& y) const { return value(*cells_, gradient_at(x), x, y); }

std::array<double, 2> CorrectorField::grad_y(const Point& x, const Point& y) const {
  return grad_y(*cells_, gradient_at(x), x, y);
}

double CorrectorField::value(const CellSolutionSet& cells, const std::array<double, 2>& g, const Point& x,
                             const Point& y) {
  double v = 0.0;
  for (int l = 0; l < cells.dim(); ++l)
    if (g[l] != 0.0) v += g[l] * cells.value(l, x, y);
  return v;
}

std::array<double, 2> CorrectorField::grad_y(const CellSolutionSet& cells, const std::array<double, 2>& g,
                                             const Point& x, const Point& y) {
  std::array<double, 2> out{0.0, 0.0};
  for (int l = 0; l < cells.dim(); ++l) {
    if (g[l] == 0.0) continue;
    const auto gw = cells.grad_y(l, x, y);
    out[0] += g[l] * gw[0];
    out[1] += g[l] * gw[1];
  }
  return out;
}

std::string homogenized_tensor_csv(const HomogenizedTensorField& field) {
  const MacroGrid& g = field.grid();
  if (g.dim == 1) {
    CsvWriter w({"x", "a0_11"});
    for (std::size_t k = 0; k < g.size(); ++k) w.row({g.point(k)[0], field.at_point(k)[0]});
    return w.str();
  }
  CsvWriter w({"x1", "x2", "a0_11", "a0_12", "a0_21", "a0_22"});
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto& a = field.at_point(k);
    w.row({g.point(k)[0], g.point(k)[1], a[0], a[1], a[2], a[3]});
  }
  return w.str();
}

std::string cell_solution_csv(const CellSolutionSet& cells, std::size_t k) {
  const std::size_t n = cells.cells();
  const double h = 1.0 / static_cast<double>(n);
  if (cells.dim() == 1) {
    CsvWriter w({"y", "w1"});
    for (std::size_t i = 0; i < n; ++i) w.row({i * h, cells.w(k, 0)[i]});
    return w.str();
  }
  CsvWriter w({"y1", "y2", "w1", "w2"});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) w.row({i * h, j * h, cells.w(k, 0)[i * n + j], cells.w(k, 1)[i * n + j]});
  return w.str();
}

}  // namespace twoscale
