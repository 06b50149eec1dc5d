#include "twoscale/two_scale.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "twoscale/csv.hpp"
#include "twoscale/quadrature.hpp"

namespace twoscale {
namespace {

std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// Q1 shape function of corner `a` (bit i = upper end along axis i).
double shape(int dim, unsigned a, const double* s) {
  double v = 1.0;
  for (int i = 0; i < dim; ++i) v *= ((a >> i) & 1u) ? s[i] : 1.0 - s[i];
  return v;
}

double shape_derivative(int dim, unsigned a, const double* s, int p) {
  double v = 1.0;
  for (int i = 0; i < dim; ++i) {
    const bool upper = (a >> i) & 1u;
    v *= (i == p) ? (upper ? 1.0 : -1.0) : (upper ? s[i] : 1.0 - s[i]);
  }
  return v;
}

// Flat node index of corner `a` of the cell with per-axis origin `origin`,
// row-major with `extent` nodes per axis and optional periodic wrap.
std::size_t corner_node(int dim, const std::size_t* origin, unsigned a, std::size_t extent, bool periodic) {
  std::size_t flat = 0;
  for (int i = 0; i < dim; ++i) {
    std::size_t k = origin[i] + ((a >> i) & 1u);
    if (periodic && k == extent) k = 0;
    flat = flat * extent + k;
  }
  return flat;
}

// Element matrix for A = 1 on local dofs [u0 corners | u1 (x corner, y corner)],
// integrated with the tensor 2-point Gauss rule (exact for Q1 x Q1).
std::vector<double> reference_matrix(int dim, double h) {
  const unsigned nc = 1u << dim;
  const std::size_t local = nc + nc * nc;
  std::vector<double> k(local * local, 0.0);
  const Rule1d g = gauss_legendre(2);
  const int nq = 2 * dim;
  const std::size_t npts = ipow(2, nq);
  std::vector<double> grad(dim * local);
  const double vol = std::pow(h, 2 * dim);
  for (std::size_t q = 0; q < npts; ++q) {
    double s[2], t[2], w = 1.0;
    for (int i = 0; i < nq; ++i) {
      const std::size_t bit = (q >> i) & 1u;
      (i < dim ? s[i] : t[i - dim]) = g.nodes[bit];
      w *= g.weights[bit];
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int p = 0; p < dim; ++p) {
      double* gp = &grad[p * local];
      for (unsigned a = 0; a < nc; ++a) gp[a] = shape_derivative(dim, a, s, p) / h;
      for (unsigned a = 0; a < nc; ++a)
        for (unsigned b = 0; b < nc; ++b) gp[nc + a * nc + b] = shape(dim, a, s) * shape_derivative(dim, b, t, p) / h;
    }
    for (std::size_t i = 0; i < local; ++i)
      for (std::size_t j = 0; j < local; ++j) {
        double v = 0.0;
        for (int p = 0; p < dim; ++p) v += grad[p * local + i] * grad[p * local + j];
        k[i * local + j] += vol * w * v;
      }
  }
  return k;
}

std::vector<Point> cell_midpoints(int dim, std::size_t n) {
  std::vector<Point> pts;
  const double h = 1.0 / static_cast<double>(n);
  if (dim == 1) {
    for (std::size_t i = 0; i < n; ++i) pts.push_back(make_point((i + 0.5) * h));
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) pts.push_back(make_point((i + 0.5) * h, (j + 0.5) * h));
  }
  return pts;
}

template <int D>
void element_kernel(std::size_t x_cells_per_axis, std::size_t y_cells, std::size_t y_nodes,
                    const std::uint32_t* x_corner, const std::uint32_t* y_corner, const double* a_elem,
                    const double* kref, const double* u0, const double* u1, double* r0, double* r1, bool parallel) {
  constexpr unsigned nc = 1u << D;
  constexpr std::size_t local = nc + nc * nc;
  const std::size_t slab = D == 1 ? 1 : x_cells_per_axis;  // x-cells sharing the first-axis index
  const std::ptrdiff_t slabs = static_cast<std::ptrdiff_t>(x_cells_per_axis);
  // Slabs of one parity touch disjoint node rows along the first axis.
  for (int color = 0; color < 2; ++color) {
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t s = color; s < slabs; s += 2) {
      for (std::size_t ex = static_cast<std::size_t>(s) * slab; ex < (static_cast<std::size_t>(s) + 1) * slab; ++ex) {
        const std::uint32_t* xc = x_corner + ex * nc;
        double loc[local], res[local];
        for (unsigned a = 0; a < nc; ++a) loc[a] = u0[xc[a]];
        double r0_acc[nc] = {};
        for (std::size_t ey = 0; ey < y_cells; ++ey) {
          const std::uint32_t* yc = y_corner + ey * nc;
          for (unsigned a = 0; a < nc; ++a) {
            const double* row = u1 + static_cast<std::size_t>(xc[a]) * y_nodes;
            for (unsigned b = 0; b < nc; ++b) loc[nc + a * nc + b] = row[yc[b]];
          }
          const double ae = a_elem[ex * y_cells + ey];
          for (std::size_t i = 0; i < local; ++i) {
            const double* krow = kref + i * local;
            double v = 0.0;
            for (std::size_t j = 0; j < local; ++j) v += krow[j] * loc[j];
            res[i] = ae * v;
          }
          for (unsigned a = 0; a < nc; ++a) {
            r0_acc[a] += res[a];
            double* row = r1 + static_cast<std::size_t>(xc[a]) * y_nodes;
            for (unsigned b = 0; b < nc; ++b) row[yc[b]] += res[nc + a * nc + b];
          }
        }
        for (unsigned a = 0; a < nc; ++a) r0[xc[a]] += r0_acc[a];
      }
    }
  }
}

}  // namespace

const char* to_string(TensorMode mode) { return mode == TensorMode::full ? "full" : "sparse"; }

DofCounts count_dofs(int dim, int level) {
  if (dim != 1 && dim != 2) throw DimensionError("count_dofs: dimension must be 1 or 2");
  if (level < 0) throw DimensionError("count_dofs: level must be >= 0");
  const std::size_t n = cells_at_level(level);
  // Number of d-dimensional tensor functions whose maximal axis level is l.
  auto per_level = [dim](WaveletKind kind, int l) {
    const std::size_t upto = WaveletBasis1d::level_offset(kind, l) + WaveletBasis1d::level_count(kind, l);
    const std::size_t below = l == 0 ? 0 : WaveletBasis1d::level_offset(kind, l);
    return ipow(upto, dim) - ipow(below, dim);
  };
  DofCounts c;
  c.u0 = ipow(n - 1, dim);
  c.u1_full = ipow(n + 1, dim) * (ipow(n, dim) - 1);
  for (int lx = 0; lx <= level; ++lx)
    for (int ly = 0; ly + lx <= level; ++ly) {
      std::size_t ny = per_level(WaveletKind::periodic, ly);
      if (ly == 0) ny -= 1;  // the function constant in y
      c.u1_sparse += per_level(WaveletKind::interval_l2, lx) * ny;
    }
  return c;
}

TwoScaleSpace::TwoScaleSpace(int dim, int level, TensorMode mode)
    : dim_(dim),
      level_(level),
      mode_(mode),
      x_l2_(WaveletKind::interval_l2, level),
      x_h10_(WaveletKind::interval_h10, level),
      y_per_(WaveletKind::periodic, level) {
  if (dim != 1 && dim != 2) throw DimensionError("TwoScaleSpace: dimension must be 1 or 2");
  const std::size_t n = cells();
  u0_size_ = ipow(n - 1, dim);
  x_extent_ = ipow(n + 1, dim);
  y_extent_ = ipow(n, dim);
  if (x_extent_ * y_extent_ > kMaxNodalUnknowns) {
    throw NumericalError("two-scale space at L=" + std::to_string(level) + ", d=" + std::to_string(dim) + " needs " +
                         std::to_string(x_extent_ * y_extent_) + " nodal unknowns (limit " +
                         std::to_string(kMaxNodalUnknowns) + ")");
  }
  std::vector<int> ylev(y_extent_);
  std::vector<char> yconst(y_extent_);
  for (std::size_t yf = 0; yf < y_extent_; ++yf) {
    ylev[yf] = y_level(yf);
    yconst[yf] = y_is_constant(yf);
  }
  pos_to_dof_.assign(x_extent_ * y_extent_, -1);
  for (std::size_t xf = 0; xf < x_extent_; ++xf) {
    const int lx = x_level(xf);
    for (std::size_t yf = 0; yf < y_extent_; ++yf) {
      if (yconst[yf]) continue;
      if (mode == TensorMode::sparse && lx + ylev[yf] > level) continue;
      const std::size_t pos = xf * y_extent_ + yf;
      pos_to_dof_[pos] = static_cast<std::int64_t>(u1_pos_.size());
      u1_pos_.push_back(pos);
    }
  }
}

std::array<std::size_t, 2> TwoScaleSpace::x_multi(std::size_t flat) const {
  const std::size_t e = cells() + 1;
  return dim_ == 1 ? std::array<std::size_t, 2>{flat, 0} : std::array<std::size_t, 2>{flat / e, flat % e};
}

std::array<std::size_t, 2> TwoScaleSpace::y_multi(std::size_t flat) const {
  const std::size_t e = cells();
  return dim_ == 1 ? std::array<std::size_t, 2>{flat, 0} : std::array<std::size_t, 2>{flat / e, flat % e};
}

int TwoScaleSpace::x_level(std::size_t flat) const {
  const auto m = x_multi(flat);
  int l = x_l2_.level_of(m[0]);
  if (dim_ == 2) l = std::max(l, x_l2_.level_of(m[1]));
  return l;
}

int TwoScaleSpace::y_level(std::size_t flat) const {
  const auto m = y_multi(flat);
  int l = y_per_.level_of(m[0]);
  if (dim_ == 2) l = std::max(l, y_per_.level_of(m[1]));
  return l;
}

bool TwoScaleSpace::y_is_constant(std::size_t flat) const {
  const auto m = y_multi(flat);
  return m[0] == 0 && (dim_ == 1 || m[1] == 0);
}

std::vector<double> embed_coefficients(const TwoScaleSpace& coarse, std::span<const double> coeffs,
                                       const TwoScaleSpace& fine) {
  if (coarse.dim() != fine.dim() || coarse.level() > fine.level())
    throw DimensionError("embed_coefficients: spaces are not nested");
  if (coeffs.size() != coarse.size()) throw DimensionError("embed_coefficients: coefficient size mismatch");
  const int d = coarse.dim();
  std::vector<double> out(fine.size(), 0.0);
  // u0: interval_h10 indices are level-major and shared across levels.
  const std::size_t nc0 = coarse.cells() - 1, nf0 = fine.cells() - 1;
  for (std::size_t i = 0; i < coarse.u0_size(); ++i) {
    const std::size_t f = d == 1 ? i : (i / nc0) * nf0 + i % nc0;
    out[f] = coeffs[i];
  }
  const std::size_t nxc = coarse.cells() + 1, nxf = fine.cells() + 1;
  const std::size_t nyc = coarse.cells(), nyf = fine.cells();
  for (std::size_t k = 0; k < coarse.u1_size(); ++k) {
    const std::size_t pos = coarse.u1_position(k);
    const std::size_t xf = pos / coarse.y_extent(), yf = pos % coarse.y_extent();
    const std::size_t xf_fine = d == 1 ? xf : (xf / nxc) * nxf + xf % nxc;
    const std::size_t yf_fine = d == 1 ? yf : (yf / nyc) * nyf + yf % nyc;
    const std::int64_t dof = fine.dof_at_position(xf_fine * fine.y_extent() + yf_fine);
    if (dof < 0) throw DimensionError("embed_coefficients: coarse function missing from fine space");
    out[fine.u0_size() + static_cast<std::size_t>(dof)] = coeffs[coarse.u0_size() + k];
  }
  return out;
}

TwoScaleOperator::TwoScaleOperator(const TwoScaleSpace& space, const TwoScaleCoefficient& coeff,
                                   const ParameterVector& z, Execution exec)
    : space_(&space), exec_(exec) {
  if (coeff.dim() != space.dim()) throw DimensionError("TwoScaleOperator: coefficient and space dimensions differ");
  const int d = space.dim();
  const std::size_t n = space.cells();
  const unsigned nc = 1u << d;
  x_nodes_ = ipow(n + 1, d);
  y_nodes_ = ipow(n, d);
  x_cells_ = ipow(n, d);
  y_cells_ = ipow(n, d);
  local_ = nc + nc * nc;

  x_corner_.resize(x_cells_ * nc);
  y_corner_.resize(y_cells_ * nc);
  for (std::size_t c = 0; c < x_cells_; ++c) {
    const std::size_t origin[2] = {d == 1 ? c : c / n, d == 1 ? 0 : c % n};
    for (unsigned a = 0; a < nc; ++a) {
      x_corner_[c * nc + a] = static_cast<std::uint32_t>(corner_node(d, origin, a, n + 1, false));
      y_corner_[c * nc + a] = static_cast<std::uint32_t>(corner_node(d, origin, a, n, true));
    }
  }

  CoefficientTable table(coeff, cell_midpoints(d, n), cell_midpoints(d, n));
  a_elem_ = table.evaluate(z);
  k_ref_ = reference_matrix(d, space.h());

  // Exact diagonal of the A = 1 operator from 1D mass and stiffness values.
  inv_diag_.resize(space.size());
  const auto& b0 = space.u0_basis();
  for (std::size_t i = 0; i < space.u0_size(); ++i) {
    double v;
    if (d == 1) {
      v = b0.stiffness(i);
    } else {
      const std::size_t i0 = i / (n - 1), i1 = i % (n - 1);
      v = b0.stiffness(i0) * b0.mass(i1) + b0.mass(i0) * b0.stiffness(i1);
    }
    inv_diag_[i] = 1.0 / v;
  }
  const auto& bx = space.x_basis();
  const auto& by = space.y_basis();
  for (std::size_t k = 0; k < space.u1_size(); ++k) {
    const std::size_t pos = space.u1_position(k);
    const auto xm = space.x_multi(pos / space.y_extent());
    const auto ym = space.y_multi(pos % space.y_extent());
    double v;
    if (d == 1) {
      v = bx.mass(xm[0]) * by.stiffness(ym[0]);
    } else {
      v = bx.mass(xm[0]) * bx.mass(xm[1]) *
          (by.stiffness(ym[0]) * by.mass(ym[1]) + by.mass(ym[0]) * by.stiffness(ym[1]));
    }
    inv_diag_[space.u0_size() + k] = 1.0 / v;
  }

  u0n_.resize(x_nodes_);
  r0n_.resize(x_nodes_);
  u1n_.resize(x_nodes_ * y_nodes_);
  r1n_.resize(x_nodes_ * y_nodes_);
}

void TwoScaleOperator::apply_nodal(std::span<const double> u0, std::span<const double> u1, std::span<double> r0,
                                   std::span<double> r1) const {
  if (u0.size() != x_nodes_ || r0.size() != x_nodes_ || u1.size() != x_nodes_ * y_nodes_ ||
      r1.size() != x_nodes_ * y_nodes_)
    throw DimensionError("TwoScaleOperator::apply_nodal: size mismatch");
  std::fill(r0.begin(), r0.end(), 0.0);
  std::fill(r1.begin(), r1.end(), 0.0);
  const bool par = exec_ == Execution::parallel;
  const std::size_t n = space_->cells();
  if (space_->dim() == 1) {
    element_kernel<1>(n, y_cells_, y_nodes_, x_corner_.data(), y_corner_.data(), a_elem_.data(), k_ref_.data(),
                      u0.data(), u1.data(), r0.data(), r1.data(), par);
  } else {
    element_kernel<2>(n, y_cells_, y_nodes_, x_corner_.data(), y_corner_.data(), a_elem_.data(), k_ref_.data(),
                      u0.data(), u1.data(), r0.data(), r1.data(), par);
  }
}

void TwoScaleOperator::coefficients_to_nodal(std::span<const double> coeffs, std::vector<double>& u0_nodal,
                                             std::vector<double>& u1_nodal) const {
  if (coeffs.size() != space_->size()) throw DimensionError("coefficients_to_nodal: size mismatch");
  const int d = space_->dim();
  const std::size_t n = space_->cells();
  const bool par = exec_ == Execution::parallel;

  std::vector<double> interior(coeffs.begin(), coeffs.begin() + space_->u0_size());
  const std::size_t s0[2] = {n - 1, n - 1};
  for (int a = 0; a < d; ++a) transform_axis(space_->u0_basis(), interior, std::span(s0, d), a, false, par);
  u0_nodal.assign(x_nodes_, 0.0);
  for (std::size_t i = 0; i < interior.size(); ++i) {
    const std::size_t node = d == 1 ? i + 1 : (i / (n - 1) + 1) * (n + 1) + i % (n - 1) + 1;
    u0_nodal[node] = interior[i];
  }

  u1_nodal.assign(x_nodes_ * y_nodes_, 0.0);
  for (std::size_t k = 0; k < space_->u1_size(); ++k)
    u1_nodal[space_->u1_position(k)] = coeffs[space_->u0_size() + k];
  const std::size_t s1[4] = {n + 1, d == 1 ? n : n + 1, n, n};
  std::span<const std::size_t> shape(s1, 2 * d);
  for (int a = 0; a < d; ++a) transform_axis(space_->x_basis(), u1_nodal, shape, a, false, par);
  for (int a = d; a < 2 * d; ++a) transform_axis(space_->y_basis(), u1_nodal, shape, a, false, par);
}

void TwoScaleOperator::nodal_to_coefficients_transpose(std::span<const double> r0, std::span<const double> r1,
                                                       std::span<double> out) const {
  const int d = space_->dim();
  const std::size_t n = space_->cells();
  const bool par = exec_ == Execution::parallel;

  std::vector<double> interior(space_->u0_size());
  for (std::size_t i = 0; i < interior.size(); ++i) {
    const std::size_t node = d == 1 ? i + 1 : (i / (n - 1) + 1) * (n + 1) + i % (n - 1) + 1;
    interior[i] = r0[node];
  }
  const std::size_t s0[2] = {n - 1, n - 1};
  for (int a = 0; a < d; ++a) transform_axis(space_->u0_basis(), interior, std::span(s0, d), a, true, par);
  std::copy(interior.begin(), interior.end(), out.begin());

  full_.assign(r1.begin(), r1.end());
  const std::size_t s1[4] = {n + 1, d == 1 ? n : n + 1, n, n};
  std::span<const std::size_t> shape(s1, 2 * d);
  for (int a = 0; a < d; ++a) transform_axis(space_->x_basis(), full_, shape, a, true, par);
  for (int a = d; a < 2 * d; ++a) transform_axis(space_->y_basis(), full_, shape, a, true, par);
  for (std::size_t k = 0; k < space_->u1_size(); ++k) out[space_->u0_size() + k] = full_[space_->u1_position(k)];
}

void TwoScaleOperator::apply(std::span<const double> in, std::span<double> out) const {
  if (in.size() != size() || out.size() != size()) throw DimensionError("TwoScaleOperator::apply: size mismatch");
  coefficients_to_nodal(in, u0n_, u1n_);
  apply_nodal(u0n_, u1n_, r0n_, r1n_);
  nodal_to_coefficients_transpose(r0n_, r1n_, out);
}

std::vector<double> TwoScaleOperator::load_vector(double f) const {
  const int d = space_->dim();
  const std::size_t n = space_->cells();
  std::vector<double> interior(space_->u0_size(), f * std::pow(space_->h(), d));
  const std::size_t s0[2] = {n - 1, n - 1};
  for (int a = 0; a < d; ++a)
    transform_axis(space_->u0_basis(), interior, std::span(s0, d), a, true, exec_ == Execution::parallel);
  std::vector<double> out(size(), 0.0);
  std::copy(interior.begin(), interior.end(), out.begin());
  return out;
}

Eigen::SparseMatrix<double> assemble_two_scale_matrix(const TwoScaleSpace& space, const TwoScaleCoefficient& coeff,
                                                      const ParameterVector& z) {
  using Triplet = Eigen::Triplet<double>;
  const int d = space.dim();
  const std::size_t n = space.cells();
  const double h = space.h();
  const unsigned nc = 1u << d;
  const std::size_t xn = ipow(n + 1, d), yn = ipow(n, d), cells = ipow(n, d);
  const std::size_t n0 = ipow(n - 1, d);
  const std::size_t nodal = n0 + xn * yn;

  // Interior numbering of u0 nodes; -1 on the boundary.
  std::vector<std::int64_t> interior(xn, -1);
  for (std::size_t node = 0; node < xn; ++node) {
    const std::size_t i0 = d == 1 ? node : node / (n + 1), i1 = d == 1 ? 1 : node % (n + 1);
    const bool inside = i0 > 0 && i0 < n && (d == 1 || (i1 > 0 && i1 < n));
    if (inside) interior[node] = d == 1 ? static_cast<std::int64_t>(i0 - 1)
                                        : static_cast<std::int64_t>((i0 - 1) * (n - 1) + (i1 - 1));
  }

  // Nodal stiffness with per-element Gauss quadrature (2 points per axis)
  // and the coefficient frozen at the element midpoint.
  const Rule1d g = gauss_legendre(2);
  std::vector<Triplet> kt;
  const std::size_t local = nc + nc * nc;
  std::vector<double> grad(d * local), ke(local * local);
  std::vector<std::int64_t> dofs(local);
  for (std::size_t ex = 0; ex < cells; ++ex) {
    const std::size_t xo[2] = {d == 1 ? ex : ex / n, d == 1 ? 0 : ex % n};
    const Point xm = make_point((xo[0] + 0.5) * h, (xo[1] + 0.5) * h);
    for (std::size_t ey = 0; ey < cells; ++ey) {
      const std::size_t yo[2] = {d == 1 ? ey : ey / n, d == 1 ? 0 : ey % n};
      const Point ym = make_point((yo[0] + 0.5) * h, (yo[1] + 0.5) * h);
      const double ae = coeff.eval(z, xm, ym);
      for (unsigned a = 0; a < nc; ++a) {
        dofs[a] = interior[corner_node(d, xo, a, n + 1, false)];
        for (unsigned b = 0; b < nc; ++b)
          dofs[nc + a * nc + b] = static_cast<std::int64_t>(n0 + corner_node(d, xo, a, n + 1, false) * yn +
                                                            corner_node(d, yo, b, n, true));
      }
      std::fill(ke.begin(), ke.end(), 0.0);
      for (std::size_t q = 0; q < ipow(2, 2 * d); ++q) {
        double s[2] = {0, 0}, t[2] = {0, 0}, w = 1.0;
        for (int i = 0; i < 2 * d; ++i) {
          const std::size_t bit = (q >> i) & 1u;
          (i < d ? s[i] : t[i - d]) = g.nodes[bit];
          w *= g.weights[bit];
        }
        for (int p = 0; p < d; ++p)
          for (std::size_t i = 0; i < local; ++i) {
            double v;
            if (i < nc) {
              v = shape_derivative(d, static_cast<unsigned>(i), s, p) / h;
            } else {
              const unsigned a = static_cast<unsigned>((i - nc) / nc), b = static_cast<unsigned>((i - nc) % nc);
              v = shape(d, a, s) * shape_derivative(d, b, t, p) / h;
            }
            grad[p * local + i] = v;
          }
        const double wv = ae * w * std::pow(h, 2 * d);
        for (std::size_t i = 0; i < local; ++i)
          for (std::size_t j = 0; j < local; ++j) {
            double v = 0.0;
            for (int p = 0; p < d; ++p) v += grad[p * local + i] * grad[p * local + j];
            ke[i * local + j] += wv * v;
          }
      }
      for (std::size_t i = 0; i < local; ++i) {
        if (dofs[i] < 0) continue;
        for (std::size_t j = 0; j < local; ++j)
          if (dofs[j] >= 0 && ke[i * local + j] != 0.0) kt.emplace_back(dofs[i], dofs[j], ke[i * local + j]);
      }
    }
  }
  Eigen::SparseMatrix<double> k(nodal, nodal);
  k.setFromTriplets(kt.begin(), kt.end());

  // Basis-to-nodal matrix from direct evaluation of every basis function.
  std::vector<Triplet> tt;
  const auto& b0 = space.u0_basis();
  std::vector<std::vector<double>> v0(b0.size());
  for (std::size_t i = 0; i < b0.size(); ++i) v0[i] = b0.fine_nodal_values(i);
  for (std::size_t i = 0; i < space.u0_size(); ++i) {
    const std::size_t i0 = d == 1 ? i : i / (n - 1), i1 = d == 1 ? 0 : i % (n - 1);
    for (std::size_t node = 0; node < xn; ++node) {
      if (interior[node] < 0) continue;
      const std::size_t j0 = d == 1 ? node : node / (n + 1), j1 = d == 1 ? 0 : node % (n + 1);
      const double v = d == 1 ? v0[i0][j0] : v0[i0][j0] * v0[i1][j1];
      if (v != 0.0) tt.emplace_back(interior[node], static_cast<std::int64_t>(i), v);
    }
  }
  const auto& bx = space.x_basis();
  const auto& by = space.y_basis();
  std::vector<std::vector<double>> vx(bx.size()), vy(by.size());
  for (std::size_t i = 0; i < bx.size(); ++i) vx[i] = bx.fine_nodal_values(i);
  for (std::size_t i = 0; i < by.size(); ++i) vy[i] = by.fine_nodal_values(i);
  for (std::size_t k1 = 0; k1 < space.u1_size(); ++k1) {
    const std::size_t pos = space.u1_position(k1);
    const auto xm = space.x_multi(pos / space.y_extent());
    const auto ym = space.y_multi(pos % space.y_extent());
    std::vector<std::pair<std::size_t, double>> xs, ys;
    for (std::size_t node = 0; node < xn; ++node) {
      const std::size_t j0 = d == 1 ? node : node / (n + 1), j1 = d == 1 ? 0 : node % (n + 1);
      const double v = d == 1 ? vx[xm[0]][j0] : vx[xm[0]][j0] * vx[xm[1]][j1];
      if (v != 0.0) xs.emplace_back(node, v);
    }
    for (std::size_t node = 0; node < yn; ++node) {
      const std::size_t j0 = d == 1 ? node : node / n, j1 = d == 1 ? 0 : node % n;
      const double v = d == 1 ? vy[ym[0]][j0] : vy[ym[0]][j0] * vy[ym[1]][j1];
      if (v != 0.0) ys.emplace_back(node, v);
    }
    for (const auto& [xnode, xv] : xs)
      for (const auto& [ynode, yv] : ys)
        tt.emplace_back(static_cast<std::int64_t>(n0 + xnode * yn + ynode),
                        static_cast<std::int64_t>(space.u0_size() + k1), xv * yv);
  }
  Eigen::SparseMatrix<double> t(nodal, space.size());
  t.setFromTriplets(tt.begin(), tt.end());
  Eigen::SparseMatrix<double> b = t.transpose() * k * t;
  b.prune(0.0);
  return b;
}

TwoScaleSolution solve_two_scale(const TwoScaleSpace& space, const TwoScaleCoefficient& coeff,
                                 const ParameterVector& z, const TwoScaleSolveOptions& options) {
  TwoScaleOperator op(space, coeff, z, options.exec);
  const auto rhs = op.load_vector(options.source);
  TwoScaleSolution sol;
  sol.dim = space.dim();
  sol.level = space.level();
  sol.mode = space.mode();
  sol.coefficients.assign(space.size(), 0.0);
  sol.solver = conjugate_gradient([&op](std::span<const double> in, std::span<double> out) { op.apply(in, out); },
                                  op.inverse_diagonal(), rhs, sol.coefficients, options.cg);
  op.coefficients_to_nodal(sol.coefficients, sol.u0_nodal, sol.u1_nodal);
  return sol;
}

double energy_difference(const TwoScaleOperator& op, const TwoScaleSolution& fine, const TwoScaleSpace& coarse_space,
                         const TwoScaleSolution& coarse) {
  auto e = embed_coefficients(coarse_space, coarse.coefficients, op.space());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = fine.coefficients[i] - e[i];
  std::vector<double> be(e.size());
  op.apply(e, be);
  const double v = std::inner_product(e.begin(), e.end(), be.begin(), 0.0);
  return std::sqrt(std::max(v, 0.0));
}

namespace {

// Cell index and local coordinate of t on a uniform mesh of n cells.
std::pair<std::size_t, double> locate(double t, std::size_t n) {
  const double u = std::clamp(t, 0.0, 1.0) * static_cast<double>(n);
  const std::size_t c = std::min(static_cast<std::size_t>(u), n - 1);
  return {c, u - static_cast<double>(c)};
}

}  // namespace

double TwoScaleSolution::u0_at(const Point& x) const {
  const std::size_t n = cells();
  const auto [c0, s0] = locate(x[0], n);
  if (dim == 1) return (1.0 - s0) * u0_nodal[c0] + s0 * u0_nodal[c0 + 1];
  const auto [c1, s1] = locate(x[1], n);
  auto at = [&](std::size_t i, std::size_t j) { return u0_nodal[i * (n + 1) + j]; };
  return (1 - s0) * (1 - s1) * at(c0, c1) + s0 * (1 - s1) * at(c0 + 1, c1) + (1 - s0) * s1 * at(c0, c1 + 1) +
         s0 * s1 * at(c0 + 1, c1 + 1);
}

std::array<double, 2> TwoScaleSolution::grad_u0(const Point& x) const {
  const std::size_t n = cells();
  const double inv_h = static_cast<double>(n);
  const auto [c0, s0] = locate(x[0], n);
  if (dim == 1) return {(u0_nodal[c0 + 1] - u0_nodal[c0]) * inv_h, 0.0};
  const auto [c1, s1] = locate(x[1], n);
  auto at = [&](std::size_t i, std::size_t j) { return u0_nodal[i * (n + 1) + j]; };
  const double g0 = ((1 - s1) * (at(c0 + 1, c1) - at(c0, c1)) + s1 * (at(c0 + 1, c1 + 1) - at(c0, c1 + 1))) * inv_h;
  const double g1 = ((1 - s0) * (at(c0, c1 + 1) - at(c0, c1)) + s0 * (at(c0 + 1, c1 + 1) - at(c0 + 1, c1))) * inv_h;
  return {g0, g1};
}

std::vector<double> TwoScaleSolution::u1_slice(const Point& x) const {
  const std::size_t n = cells();
  const std::size_t yn = dim == 1 ? n : n * n;
  std::vector<double> out(yn, 0.0);
  auto add_row = [&](std::size_t xnode, double w) {
    if (w == 0.0) return;
    const double* row = &u1_nodal[xnode * yn];
    for (std::size_t j = 0; j < yn; ++j) out[j] += w * row[j];
  };
  const auto [c0, s0] = locate(x[0], n);
  if (dim == 1) {
    add_row(c0, 1.0 - s0);
    add_row(c0 + 1, s0);
  } else {
    const auto [c1, s1] = locate(x[1], n);
    add_row(c0 * (n + 1) + c1, (1 - s0) * (1 - s1));
    add_row((c0 + 1) * (n + 1) + c1, s0 * (1 - s1));
    add_row(c0 * (n + 1) + c1 + 1, (1 - s0) * s1);
    add_row((c0 + 1) * (n + 1) + c1 + 1, s0 * s1);
  }
  const double mean = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(yn);
  for (double& v : out) v -= mean;
  return out;
}

std::string u0_csv(const TwoScaleSolution& sol) {
  const std::size_t n = sol.cells();
  const double h = 1.0 / static_cast<double>(n);
  if (sol.dim == 1) {
    CsvWriter w({"x", "u0"});
    for (std::size_t i = 0; i <= n; ++i) w.row({i * h, sol.u0_nodal[i]});
    return w.str();
  }
  CsvWriter w({"x1", "x2", "u0"});
  for (std::size_t i = 0; i <= n; ++i)
    for (std::size_t j = 0; j <= n; ++j) w.row({i * h, j * h, sol.u0_nodal[i * (n + 1) + j]});
  return w.str();
}

std::string u1_slice_csv(const TwoScaleSolution& sol, const Point& x) {
  const std::size_t n = sol.cells();
  const double h = 1.0 / static_cast<double>(n);
  const auto s = sol.u1_slice(x);
  if (sol.dim == 1) {
    CsvWriter w({"y", "u1"});
    for (std::size_t j = 0; j < n; ++j) w.row({j * h, s[j]});
    return w.str();
  }
  CsvWriter w({"y1", "y2", "u1"});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) w.row({i * h, j * h, s[i * n + j]});
  return w.str();
}

}  // namespace twoscale
