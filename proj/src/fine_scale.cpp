#include "twoscale/fine_scale.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "q1_element.hpp"
#include "twoscale/csv.hpp"
#include "twoscale/quadrature.hpp"

namespace twoscale {
namespace {

std::pair<std::size_t, double> locate(double t, std::size_t n) {
  const double u = std::clamp(t, 0.0, 1.0) * static_cast<double>(n);
  const std::size_t c = std::min(static_cast<std::size_t>(u), n - 1);
  return {c, u - static_cast<double>(c)};
}

double composite(const std::function<double(double)>& g, double a, double b, std::size_t panels, const Rule1d& r) {
  const double w = (b - a) / static_cast<double>(panels);
  double sum = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double left = a + static_cast<double>(p) * w;
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * g(left + w * r.nodes[i]);
    sum += w * s;
  }
  return sum;
}

Point scaled(const Point& x, double epsilon) { return make_point(x[0] / epsilon, x[1] / epsilon); }

}  // namespace

void EpsilonProblem::validate() const {
  if (coeff == nullptr) throw ConfigError("epsilon problem without coefficient");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in (0, 1]");
  const double inv = 1.0 / epsilon;
  if (std::abs(inv - std::round(inv)) > 1e-9 * inv)
    throw ConfigError("1/epsilon must be an integer, got epsilon = " + format_double(epsilon));
  if (resolution < 8) throw ConfigError("fine-mesh resolution must be at least 8 cells per period");
}

std::size_t EpsilonProblem::periods() const { return static_cast<std::size_t>(std::llround(1.0 / epsilon)); }

double integrate_eps_aligned(const std::function<double(double)>& g, double epsilon, double tolerance) {
  const std::size_t periods = static_cast<std::size_t>(std::llround(1.0 / epsilon));
  const Rule1d r = gauss_legendre(5);
  std::size_t per_cell = 2;
  double prev = composite(g, 0.0, 1.0, periods * per_cell, r);
  while (per_cell * periods < (std::size_t{1} << 24)) {
    per_cell *= 2;
    const double cur = composite(g, 0.0, 1.0, periods * per_cell, r);
    if (std::abs(cur - prev) <= tolerance * std::max(1.0, std::abs(cur))) return cur;
    prev = cur;
  }
  throw NumericalError("eps-aligned quadrature did not reach tolerance " + format_double(tolerance));
}

Eps1dSolution::Eps1dSolution(const EpsilonProblem& problem, double tolerance)
    : problem_(problem), tolerance_(tolerance) {
  problem_.validate();
  if (problem_.coeff->dim() != 1) throw DimensionError("solve_eps_1d_exact requires d = 1");
  const double inv_a = integrate([this](double x) { return 1.0 / coefficient(x); });
  const double x_inv_a = integrate([this](double x) { return x / coefficient(x); });
  c_ = problem_.source * x_inv_a / inv_a;
}

double Eps1dSolution::coefficient(double x) const {
  return problem_.coeff->eval(problem_.z, make_point(x), make_point(x / problem_.epsilon));
}

double Eps1dSolution::value(double x) const {
  if (x <= 0.0) return 0.0;
  x = std::min(x, 1.0);
  const std::size_t panels = 16 * (static_cast<std::size_t>(std::ceil(x / problem_.epsilon)) + 1);
  return composite([this](double t) { return gradient(t); }, 0.0, x, panels, gauss_legendre(5));
}

Eps1dSolution solve_eps_1d_exact(const EpsilonProblem& problem, double tolerance) {
  return Eps1dSolution(problem, tolerance);
}

double FineFemSolution::value(const Point& x) const {
  const auto [c0, s0] = locate(x[0], n);
  if (dim == 1) return (1 - s0) * nodal[c0] + s0 * nodal[c0 + 1];
  const auto [c1, s1] = locate(x[1], n);
  auto at = [&](std::size_t i, std::size_t j) { return nodal[i * (n + 1) + j]; };
  return (1 - s0) * (1 - s1) * at(c0, c1) + s0 * (1 - s1) * at(c0 + 1, c1) + (1 - s0) * s1 * at(c0, c1 + 1) +
         s0 * s1 * at(c0 + 1, c1 + 1);
}

std::array<double, 2> FineFemSolution::gradient(const Point& x) const {
  const double inv_h = static_cast<double>(n);
  const auto [c0, s0] = locate(x[0], n);
  if (dim == 1) return {(nodal[c0 + 1] - nodal[c0]) * inv_h, 0.0};
  const auto [c1, s1] = locate(x[1], n);
  auto at = [&](std::size_t i, std::size_t j) { return nodal[i * (n + 1) + j]; };
  return {((1 - s1) * (at(c0 + 1, c1) - at(c0, c1)) + s1 * (at(c0 + 1, c1 + 1) - at(c0, c1 + 1))) * inv_h,
          ((1 - s0) * (at(c0, c1 + 1) - at(c0, c1)) + s0 * (at(c0 + 1, c1 + 1) - at(c0 + 1, c1))) * inv_h};
}

FineFemSolution solve_eps_fem(const EpsilonProblem& problem, const CgOptions& cg, Execution exec) {
  problem.validate();
  const int d = problem.coeff->dim();
  const std::size_t n = problem.periods() * static_cast<std::size_t>(problem.resolution);
  const std::size_t m = n + 1;
  if (d == 2 && m > kMaxFineNodesPerAxis)
    throw NumericalError("fine mesh of " + std::to_string(m) + "^2 nodes exceeds the limit of " +
                         std::to_string(kMaxFineNodesPerAxis) + "^2");
  if (d == 1 && m > (std::size_t{1} << 24)) throw NumericalError("fine 1D mesh too large");
  const double h = 1.0 / static_cast<double>(n);
  const std::size_t nodes = d == 1 ? m : m * m;
  const std::size_t cells = d == 1 ? n : n * n;

  std::vector<std::ptrdiff_t> id(nodes, -1);
  std::ptrdiff_t count = 0;
  for (std::size_t k = 0; k < nodes; ++k) {
    const std::size_t i0 = d == 1 ? k : k / m, i1 = d == 1 ? 1 : k % m;
    if (i0 > 0 && i0 < n && i1 > 0 && i1 < n) id[k] = count++;
  }

  std::vector<double> a(cells);
  const std::ptrdiff_t ncells = static_cast<std::ptrdiff_t>(cells);
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
  for (std::ptrdiff_t e = 0; e < ncells; ++e) {
    const std::size_t ue = static_cast<std::size_t>(e);
    const std::size_t o0 = d == 1 ? ue : ue / n, o1 = d == 1 ? 0 : ue % n;
    const Point mid = make_point((o0 + 0.5) * h, (o1 + 0.5) * h);
    a[ue] = problem.coeff->eval(problem.z, mid, scaled(mid, problem.epsilon));
  }

  const detail::Q1Reference ref(d, h);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(cells * ref.corners * ref.corners);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(count);
  for (std::size_t e = 0; e < cells; ++e) {
    const std::size_t o0 = d == 1 ? e : e / n, o1 = d == 1 ? 0 : e % n;
    std::ptrdiff_t dof[4];
    for (unsigned c = 0; c < ref.corners; ++c) {
      const std::size_t i0 = o0 + (c & 1u), i1 = o1 + ((c >> 1) & 1u);
      dof[c] = id[d == 1 ? i0 : i0 * m + i1];
    }
    for (unsigned i = 0; i < ref.corners; ++i) {
      if (dof[i] < 0) continue;
      rhs[dof[i]] += problem.source * std::pow(h, d) / ref.corners;
      for (unsigned j = 0; j < ref.corners; ++j)
        if (dof[j] >= 0) trip.emplace_back(dof[i], dof[j], a[e] * ref.stiffness[i][j]);
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> k(count, count);
  k.setFromTriplets(trip.begin(), trip.end());
  trip.clear();
  trip.shrink_to_fit();

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double, Eigen::RowMajor>, Eigen::Lower | Eigen::Upper> solver;
  solver.setTolerance(cg.relative_tolerance);
  solver.setMaxIterations(static_cast<Eigen::Index>(cg.max_iterations));
  solver.compute(k);
  const Eigen::VectorXd u = solver.solve(rhs);
  if (solver.info() != Eigen::Success)
    throw SolverError("fine-scale CG did not converge", static_cast<std::size_t>(solver.iterations()), solver.error());

  FineFemSolution out;
  out.dim = d;
  out.n = n;
  out.solver = {static_cast<std::size_t>(solver.iterations()), solver.error()};
  out.nodal.assign(nodes, 0.0);
  for (std::size_t k2 = 0; k2 < nodes; ++k2)
    if (id[k2] >= 0) out.nodal[k2] = u[id[k2]];
  return out;
}

TwoScaleGradient corrector_gradient(GradientFunction grad_u0, const CellSolutionSet& cells) {
  return [grad_u0 = std::move(grad_u0), &cells](const Point& x, const Point& y) {
    const auto g = grad_u0(x);
    const auto gy = CorrectorField::grad_y(cells, g, x, y);
    return std::array<double, 2>{g[0] + gy[0], g[1] + gy[1]};
  };
}

double corrector_error(const Eps1dSolution& reference, const TwoScaleGradient& two_scale, std::size_t panels_per_cell) {
  const double eps = reference.problem().epsilon;
  const std::size_t panels = reference.problem().periods() * std::max<std::size_t>(panels_per_cell, 1);
  const Rule1d r = gauss_legendre(3);
  const double w = 1.0 / static_cast<double>(panels);
  const std::ptrdiff_t np = static_cast<std::ptrdiff_t>(panels);
  // Per-panel partials keep the result independent of the thread count.
  std::vector<double> part(panels, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < np; ++p) {
    const double left = static_cast<double>(p) * w;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double x = left + w * r.nodes[i];
      const double diff = reference.gradient(x) - two_scale(make_point(x), make_point(x / eps))[0];
      part[p] += w * r.weights[i] * diff * diff;
    }
  }
  return std::sqrt(std::accumulate(part.begin(), part.end(), 0.0));
}

double corrector_error(const FineFemSolution& reference, const TwoScaleGradient& two_scale, double epsilon) {
  if (reference.dim != 2) throw DimensionError("corrector_error: FEM reference must be two-dimensional");
  const std::size_t n = reference.n;
  const double h = 1.0 / static_cast<double>(n);
  const Rule1d r = gauss_legendre(3);
  const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(n);
  std::vector<double> part(n, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t row = 0; row < rows; ++row) {
    const std::size_t o0 = static_cast<std::size_t>(row);
    for (std::size_t o1 = 0; o1 < n; ++o1)
      for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = 0; j < r.size(); ++j) {
          const Point x = make_point((o0 + r.nodes[i]) * h, (o1 + r.nodes[j]) * h);
          const auto ge = reference.gradient(x);
          const auto gt = two_scale(x, scaled(x, epsilon));
          const double d0 = ge[0] - gt[0], d1 = ge[1] - gt[1];
          part[o0] += h * h * r.weights[i] * r.weights[j] * (d0 * d0 + d1 * d1);
        }
  }
  return std::sqrt(std::accumulate(part.begin(), part.end(), 0.0));
}

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DimensionError("fit_loglog: need at least two matching points");
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw NumericalError("fit_loglog: values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double res = ly[i] - fit.intercept - fit.slope * lx[i];
      rss += res * res;
    }
    fit.stderr_slope = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

std::string rate_study_csv(const std::vector<RateRow>& rows) {
  CsvWriter w({"epsilon", "corrector_error", "h_fine", "L_two_scale", "slope_estimate"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double slope = i == 0 ? std::numeric_limits<double>::quiet_NaN()
                                : std::log(rows[i - 1].error / rows[i].error) /
                                      std::log(rows[i - 1].epsilon / rows[i].epsilon);
    w.row({rows[i].epsilon, rows[i].error, rows[i].h_fine, static_cast<double>(rows[i].two_scale_level), slope});
  }
  return w.str();
}

}  // namespace twoscale
