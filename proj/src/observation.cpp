#include "twoscale/observation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "twoscale/csv.hpp"
#include "twoscale/quadrature.hpp"
#include "twoscale/wavelet.hpp"

namespace twoscale {
namespace {

using Kind = ObservationFunctional::Kind;

// Functionals sharing the y-weight, component and kind share all y-integrals.
struct Group {
  std::array<Factor1d, 2> y_factors;
  int component = 0;
  Kind kind = Kind::gradient;
  std::vector<std::size_t> members;
};

std::vector<Group> group_functionals(const ObservationSpec& spec) {
  std::vector<Group> groups;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& f = spec.functionals[i];
    if (f.weight.dim != spec.dim) throw DimensionError("observation functional '" + f.id + "' has wrong dimension");
    std::array<Factor1d, 2> yf = f.weight.y_factors;
    if (spec.dim == 1) yf[1] = Factor1d::one();
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.y_factors == yf && g.component == f.component && g.kind == f.kind;
    });
    if (it == groups.end()) {
      groups.push_back({yf, f.component, f.kind, {}});
      it = groups.end() - 1;
    }
    it->members.push_back(i);
  }
  return groups;
}

double y_weight(const Group& g, int dim, const Point& y) {
  double v = g.y_factors[0].value(y[0]);
  if (dim == 2) v *= g.y_factors[1].value(y[1]);
  return v;
}

double x_weight(const ObservationFunctional& f, int dim, const Point& x) {
  double v = f.weight.scale * f.weight.x_factors[0].value(x[0]);
  if (dim == 2) v *= f.weight.x_factors[1].value(x[1]);
  return v;
}

// Tensor 3-point Gauss rule on the cells of a uniform n^d mesh of [0,1]^d,
// with Q1 data of each point's cell. Corner nodes are given for a mesh with
// `stride` nodes per axis, wrapping when `periodic`.
struct CellQuadrature {
  int dim = 1;
  std::size_t n = 1, per_cell = 0;
  std::vector<Point> points;
  std::vector<double> weights;
  std::vector<std::array<std::size_t, 4>> corners;
  std::vector<std::array<double, 4>> values;
  std::vector<std::array<std::array<double, 4>, 2>> grads;

  CellQuadrature(int d, std::size_t cells, bool periodic) : dim(d), n(cells) {
    const Rule1d r = gauss_legendre(3);
    const double h = 1.0 / static_cast<double>(n);
    const std::size_t stride = periodic ? n : n + 1;
    const std::size_t ncell = d == 1 ? n : n * n;
    per_cell = d == 1 ? 3 : 9;
    for (std::size_t e = 0; e < ncell; ++e) {
      const std::size_t o0 = d == 1 ? e : e / n, o1 = d == 1 ? 0 : e % n;
      for (std::size_t q = 0; q < per_cell; ++q) {
        const double s[2] = {r.nodes[q % 3], d == 2 ? r.nodes[q / 3] : 0.0};
        points.push_back(make_point((o0 + s[0]) * h, (o1 + s[1]) * h));
        weights.push_back(std::pow(h, d) * r.weights[q % 3] * (d == 2 ? r.weights[q / 3] : 1.0));
        std::array<std::size_t, 4> c{};
        std::array<double, 4> v{};
        std::array<std::array<double, 4>, 2> g{};
        for (unsigned a = 0; a < (1u << d); ++a) {
          std::size_t i0 = o0 + (a & 1u), i1 = o1 + ((a >> 1) & 1u);
          if (periodic) i0 %= n, i1 %= n;
          c[a] = d == 1 ? i0 : i0 * stride + i1;
          double val = 1.0;
          for (int i = 0; i < d; ++i) val *= ((a >> i) & 1u) ? s[i] : 1.0 - s[i];
          v[a] = val;
          for (int p = 0; p < d; ++p) {
            double gv = 1.0 / h;
            for (int i = 0; i < d; ++i) {
              const bool upper = (a >> i) & 1u;
              gv *= i == p ? (upper ? 1.0 : -1.0) : (upper ? s[i] : 1.0 - s[i]);
            }
            g[p][a] = gv;
          }
        }
        corners.push_back(c);
        values.push_back(v);
        grads.push_back(g);
      }
    }
  }

  std::size_t size() const { return points.size(); }
  unsigned corner_count() const { return 1u << dim; }
};

// Sums per-cell partial results in a fixed order so that the outcome does
// not depend on the thread count.
std::vector<double> sum_rows(const std::vector<double>& rows, std::size_t width) {
  std::vector<double> out(width, 0.0);
  for (std::size_t r = 0; r < rows.size() / width; ++r)
    for (std::size_t i = 0; i < width; ++i) out[i] += rows[r * width + i];
  return out;
}

}  // namespace

bool ObservationSpec::has_flux() const {
  return std::any_of(functionals.begin(), functionals.end(), [](const auto& f) { return f.kind == Kind::flux; });
}

ObservationSpec ObservationSpec::from_ids(const std::vector<std::string>& ids, int dim) {
  return {dim, resolve_functionals(ids, dim)};
}

std::vector<double> forward_map_homogenized(const ObservationSpec& spec, const TwoScaleSolution& sol,
                                            const TwoScaleCoefficient& coeff, const ParameterVector& z) {
  if (spec.dim != sol.dim || coeff.dim() != sol.dim) throw DimensionError("forward_map_homogenized: dimension mismatch");
  const int d = sol.dim;
  const std::size_t n = sol.cells();
  const std::size_t yn = d == 1 ? n : n * n;
  const std::size_t xn = d == 1 ? n + 1 : (n + 1) * (n + 1);
  const auto groups = group_functionals(spec);
  const CellQuadrature yq(d, n, true), xq(d, n, false);
  const unsigned nc = yq.corner_count();

  // y-weight values, their means, and for gradient groups the linear
  // functional u1 row -> int_Y Y_g d_{y_p} u1 per x-node.
  std::vector<std::vector<double>> yw(groups.size()), r_row(groups.size());
  std::vector<double> mean(groups.size(), 0.0);
  bool any_flux = false;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    yw[g].resize(yq.size());
    for (std::size_t q = 0; q < yq.size(); ++q) {
      yw[g][q] = y_weight(groups[g], d, yq.points[q]);
      mean[g] += yq.weights[q] * yw[g][q];
    }
    if (groups[g].kind == Kind::flux) {
      any_flux = true;
      continue;
    }
    std::vector<double> v(yn, 0.0);
    for (std::size_t q = 0; q < yq.size(); ++q)
      for (unsigned a = 0; a < nc; ++a)
        v[yq.corners[q][a]] += yq.weights[q] * yw[g][q] * yq.grads[q][groups[g].component][a];
    r_row[g].resize(xn);
    for (std::size_t xa = 0; xa < xn; ++xa) {
      const double* row = &sol.u1_nodal[xa * yn];
      r_row[g][xa] = std::inner_product(v.begin(), v.end(), row, 0.0);
    }
  }

  std::optional<CoefficientTable> table;
  if (any_flux) table.emplace(coeff, xq.points, yq.points);

  const std::size_t width = spec.size();
  const std::size_t xcells = xq.size() / xq.per_cell;
  std::vector<double> rows(xcells * width, 0.0);
  const std::ptrdiff_t ncell = static_cast<std::ptrdiff_t>(xcells);
#pragma omp parallel
  {
    std::vector<double> a_row(any_flux ? yq.size() : 0), m(groups.size());
    std::vector<double> gy(any_flux ? yq.size() * d : 0), u1x(any_flux ? yn : 0);
#pragma omp for schedule(static)
    for (std::ptrdiff_t c = 0; c < ncell; ++c) {
      for (std::size_t k = 0; k < xq.per_cell; ++k) {
        const std::size_t q = static_cast<std::size_t>(c) * xq.per_cell + k;
        const auto& xc = xq.corners[q];
        double g0[2] = {0.0, 0.0};
        for (int p = 0; p < d; ++p)
          for (unsigned a = 0; a < nc; ++a) g0[p] += xq.grads[q][p][a] * sol.u0_nodal[xc[a]];
        if (any_flux) {
          table->evaluate_row(z, q, a_row);
          // grad_y u1(x_q, y) at every y-quadrature point.
          std::fill(u1x.begin(), u1x.end(), 0.0);
          for (unsigned a = 0; a < nc; ++a) {
            const double phi = xq.values[q][a];
            if (phi == 0.0) continue;
            const double* row = &sol.u1_nodal[xc[a] * yn];
            for (std::size_t j = 0; j < yn; ++j) u1x[j] += phi * row[j];
          }
          for (std::size_t t = 0; t < yq.size(); ++t)
            for (int p = 0; p < d; ++p) {
              double v = 0.0;
              for (unsigned b = 0; b < nc; ++b) v += yq.grads[t][p][b] * u1x[yq.corners[t][b]];
              gy[t * d + p] = v;
            }
        }
        for (std::size_t g = 0; g < groups.size(); ++g) {
          const int p = groups[g].component;
          if (groups[g].kind == Kind::gradient) {
            double u1 = 0.0;
            for (unsigned a = 0; a < nc; ++a) u1 += xq.values[q][a] * r_row[g][xc[a]];
            m[g] = g0[p] * mean[g] + u1;
          } else {
            double v = 0.0;
            for (std::size_t t = 0; t < yq.size(); ++t) v += yq.weights[t] * yw[g][t] * a_row[t] * (g0[p] + gy[t * d + p]);
            m[g] = v;
          }
        }
        double* out = &rows[static_cast<std::size_t>(c) * width];
        for (std::size_t g = 0; g < groups.size(); ++g)
          for (std::size_t i : groups[g].members) out[i] += xq.weights[q] * x_weight(spec.functionals[i], d, xq.points[q]) * m[g];
      }
    }
  }
  return sum_rows(rows, width);
}

std::vector<double> forward_map_homogenized(const ObservationSpec& spec, const MacroField& u0,
                                            const CellSolutionSet& cells) {
  if (spec.dim != u0.dim || cells.dim() != u0.dim) throw DimensionError("forward_map_homogenized: dimension mismatch");
  const int d = u0.dim;
  const auto groups = group_functionals(spec);
  const CellQuadrature yq(d, cells.cells(), true);
  const unsigned nc = yq.corner_count();
  const std::size_t np = cells.grid().size();
  const std::size_t ng = groups.size();
  const std::size_t yq_per_cell = yq.per_cell;

  // coef[(k * ng + g) * 2 + l] = int_Y Y_g (a) (delta_pl + d_p w^l) at grid point k.
  std::vector<double> yw(ng * yq.size());
  for (std::size_t g = 0; g < ng; ++g)
    for (std::size_t t = 0; t < yq.size(); ++t) yw[g * yq.size() + t] = y_weight(groups[g], d, yq.points[t]);
  std::vector<double> coef(np * ng * 2, 0.0);
  const std::ptrdiff_t npts = static_cast<std::ptrdiff_t>(np);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t kk = 0; kk < npts; ++kk) {
    const std::size_t k = static_cast<std::size_t>(kk);
    const auto& a = cells.cell_coefficients(k);
    for (std::size_t t = 0; t < yq.size(); ++t) {
      const double ac = a[t / yq_per_cell];
      double grad_w[2][2] = {{0, 0}, {0, 0}};  // [l][p]
      for (int l = 0; l < d; ++l) {
        const auto& w = cells.w(k, l);
        for (int p = 0; p < d; ++p)
          for (unsigned b = 0; b < nc; ++b) grad_w[l][p] += yq.grads[t][p][b] * w[yq.corners[t][b]];
      }
      for (std::size_t g = 0; g < ng; ++g) {
        const int p = groups[g].component;
        const double wt = yq.weights[t] * yw[g * yq.size() + t] * (groups[g].kind == Kind::flux ? ac : 1.0);
        for (int l = 0; l < d; ++l) coef[(k * ng + g) * 2 + l] += wt * ((p == l ? 1.0 : 0.0) + grad_w[l][p]);
      }
    }
  }

  const CellQuadrature xq(d, u0.cells(), false);
  const std::size_t width = spec.size();
  const std::size_t xcells = xq.size() / xq.per_cell;
  std::vector<double> rows(xcells * width, 0.0);
  const std::ptrdiff_t ncell = static_cast<std::ptrdiff_t>(xcells);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < ncell; ++c) {
    for (std::size_t k = 0; k < xq.per_cell; ++k) {
      const std::size_t q = static_cast<std::size_t>(c) * xq.per_cell + k;
      const Point& x = xq.points[q];
      double g0[2] = {0.0, 0.0};
      for (int p = 0; p < d; ++p)
        for (unsigned a = 0; a < nc; ++a) g0[p] += xq.grads[q][p][a] * u0.nodal[xq.corners[q][a]];
      const auto st = cells.grid().interpolation(x);
      double* out = &rows[static_cast<std::size_t>(c) * width];
      for (std::size_t g = 0; g < ng; ++g) {
        double m = 0.0;
        for (int s = 0; s < st.count; ++s)
          for (int l = 0; l < d; ++l) m += st.weight[s] * g0[l] * coef[(st.index[s] * ng + g) * 2 + l];
        for (std::size_t i : groups[g].members) out[i] += xq.weights[q] * x_weight(spec.functionals[i], d, x) * m;
      }
    }
  }
  return sum_rows(rows, width);
}

std::vector<double> forward_map_eps(const ObservationSpec& spec, const Eps1dSolution& sol) {
  if (spec.dim != 1) throw DimensionError("forward_map_eps: 1D solution needs 1D functionals");
  const double eps = sol.problem().epsilon;
  std::vector<double> out;
  out.reserve(spec.size());
  for (const auto& f : spec.functionals) {
    out.push_back(sol.integrate([&](double x) {
      const double w = f.weight.value(make_point(x), make_point(x / eps));
      return w * (f.kind == Kind::flux ? sol.flux(x) : sol.gradient(x));
    }));
  }
  return out;
}

std::vector<double> forward_map_eps(const ObservationSpec& spec, const FineFemSolution& sol,
                                    const TwoScaleCoefficient& coeff, const ParameterVector& z, double epsilon) {
  if (spec.dim != sol.dim || coeff.dim() != sol.dim) throw DimensionError("forward_map_eps: dimension mismatch");
  const int d = sol.dim;
  const CellQuadrature xq(d, sol.n, false);
  const unsigned nc = xq.corner_count();
  const std::size_t width = spec.size();
  const std::size_t xcells = xq.size() / xq.per_cell;
  std::vector<double> rows(xcells * width, 0.0);
  const bool flux = spec.has_flux();
  const std::ptrdiff_t ncell = static_cast<std::ptrdiff_t>(xcells);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < ncell; ++c) {
    for (std::size_t k = 0; k < xq.per_cell; ++k) {
      const std::size_t q = static_cast<std::size_t>(c) * xq.per_cell + k;
      const Point& x = xq.points[q];
      const Point y = make_point(x[0] / epsilon, x[1] / epsilon);
      double g[2] = {0.0, 0.0};
      for (int p = 0; p < d; ++p)
        for (unsigned a = 0; a < nc; ++a) g[p] += xq.grads[q][p][a] * sol.nodal[xq.corners[q][a]];
      const double a_eps = flux ? coeff.eval(z, x, y) : 1.0;
      double* out = &rows[static_cast<std::size_t>(c) * width];
      for (std::size_t i = 0; i < width; ++i) {
        const auto& f = spec.functionals[i];
        const double w = f.weight.value(x, y) * (f.kind == Kind::flux ? a_eps : 1.0);
        out[i] += xq.weights[q] * w * g[f.component];
      }
    }
  }
  return sum_rows(rows, width);
}

Misfit::Misfit(const ForwardData& data) : delta_(data.delta) {
  const auto n = static_cast<Eigen::Index>(delta_.size());
  if (data.sigma.rows() != n || data.sigma.cols() != n) throw DimensionError("Misfit: covariance size mismatch");
  if ((data.sigma - data.sigma.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw NumericalError("Misfit: covariance is not symmetric");
  llt_.compute(data.sigma);
  if (llt_.info() != Eigen::Success) throw NumericalError("Misfit: covariance is not positive definite");
  const Eigen::MatrixXd off = data.sigma - Eigen::MatrixXd(data.sigma.diagonal().asDiagonal());
  if (off.cwiseAbs().maxCoeff() == 0.0) {
    inv_diag_.resize(delta_.size());
    for (std::size_t i = 0; i < delta_.size(); ++i) inv_diag_[i] = 1.0 / data.sigma(i, i);
  }
}

double Misfit::operator()(std::span<const double> g) const {
  if (g.size() != delta_.size()) throw DimensionError("Misfit: forward vector has wrong length");
  if (!inv_diag_.empty()) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = delta_[i] - g[i];
      s += r * r * inv_diag_[i];
    }
    return 0.5 * s;
  }
  Eigen::VectorXd r(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) r[i] = delta_[i] - g[i];
  return 0.5 * r.dot(llt_.solve(r));
}

double potential(std::span<const double> g, const ForwardData& data) { return Misfit(data)(g); }

ForwardData synthesize_data(const std::vector<double>& g0, const Eigen::MatrixXd& sigma, std::uint64_t noise_seed,
                            std::optional<ParameterVector> z_ref) {
  const auto n = static_cast<Eigen::Index>(g0.size());
  if (sigma.rows() != n || sigma.cols() != n) throw DimensionError("synthesize_data: covariance size mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("synthesize_data: covariance is not positive definite");
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd xi(n);
  for (Eigen::Index i = 0; i < n; ++i) xi[i] = normal(rng);
  const Eigen::VectorXd nu = llt.matrixL() * xi;
  ForwardData data;
  data.delta.resize(g0.size());
  for (Eigen::Index i = 0; i < n; ++i) data.delta[i] = g0[i] + nu[i];
  data.sigma = sigma;
  const Eigen::MatrixXd off = sigma - Eigen::MatrixXd(sigma.diagonal().asDiagonal());
  data.diagonal = off.cwiseAbs().maxCoeff() == 0.0;
  data.noise_seed = noise_seed;
  data.z_ref = std::move(z_ref);
  return data;
}

std::string format_data_file(const ForwardData& data) {
  std::ostringstream os;
  const std::size_t n = data.size();
  os << "# twoscale observation data\n";
  os << "N " << n << "\n";
  os << "delta";
  for (double v : data.delta) os << ' ' << format_double(v);
  os << "\n";
  if (data.diagonal) {
    os << "sigma diagonal";
    for (std::size_t i = 0; i < n; ++i) os << ' ' << format_double(data.sigma(i, i));
    os << "\n";
  } else {
    os << "sigma lower\n";
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j <= i; ++j) os << (j ? " " : "") << format_double(data.sigma(i, j));
      os << "\n";
    }
  }
  if (data.noise_seed) os << "noise_seed " << *data.noise_seed << "\n";
  if (data.z_ref) {
    os << "z_ref";
    for (double v : data.z_ref->values()) os << ' ' << format_double(v);
    os << "\n";
  }
  return os.str();
}

ForwardData parse_data_file(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) -> ConfigError {
    return ConfigError("data file line " + std::to_string(lineno) + ": " + msg);
  };
  auto numbers = [&](std::istringstream& ls) {
    std::vector<double> v;
    std::string tok;
    while (ls >> tok) {
      try {
        v.push_back(parse_double(tok));
      } catch (const ConfigError& e) {
        throw fail(e.what());
      }
    }
    return v;
  };
  ForwardData data;
  std::optional<std::size_t> n;
  bool have_delta = false, have_sigma = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "N") {
      long long v = -1;
      if (!(ls >> v) || v <= 0) throw fail("N must be a positive integer");
      n = static_cast<std::size_t>(v);
    } else if (key == "delta") {
      if (!n) throw fail("delta before N");
      data.delta = numbers(ls);
      if (data.delta.size() != *n) throw fail("expected " + std::to_string(*n) + " delta entries");
      have_delta = true;
    } else if (key == "sigma") {
      if (!n) throw fail("sigma before N");
      std::string form;
      ls >> form;
      data.sigma = Eigen::MatrixXd::Zero(*n, *n);
      if (form == "diagonal") {
        const auto v = numbers(ls);
        if (v.size() != *n) throw fail("expected " + std::to_string(*n) + " diagonal entries");
        for (std::size_t i = 0; i < *n; ++i) data.sigma(i, i) = v[i];
        data.diagonal = true;
      } else if (form == "lower") {
        for (std::size_t i = 0; i < *n; ++i) {
          if (!std::getline(in, line)) throw fail("sigma lower: missing rows");
          ++lineno;
          std::istringstream rs(line);
          const auto v = numbers(rs);
          if (v.size() != i + 1) throw fail("sigma lower row " + std::to_string(i + 1) + " needs " + std::to_string(i + 1) + " entries");
          for (std::size_t j = 0; j <= i; ++j) data.sigma(i, j) = data.sigma(j, i) = v[j];
        }
        data.diagonal = false;
      } else {
        throw fail("sigma must be 'diagonal' or 'lower'");
      }
      have_sigma = true;
    } else if (key == "noise_seed") {
      unsigned long long s = 0;
      if (!(ls >> s)) throw fail("noise_seed must be a non-negative integer");
      data.noise_seed = s;
    } else if (key == "z_ref") {
      data.z_ref = ParameterVector(numbers(ls));
    } else {
      throw fail("unknown key '" + key + "'");
    }
  }
  if (!have_delta || !have_sigma) throw ConfigError("data file: delta and sigma are required");
  Eigen::LLT<Eigen::MatrixXd> llt(data.sigma);
  if (llt.info() != Eigen::Success) throw ConfigError("data file: sigma is not positive definite");
  return data;
}

}  // namespace twoscale
