#include "twoscale/forward_models.hpp"

#include "twoscale/fine_scale.hpp"
#include "twoscale/homogenized.hpp"

namespace twoscale {
namespace {

void require_dims(const TwoScaleCoefficient& coeff, const ObservationSpec& spec, const char* who) {
  if (coeff.dim() != spec.dim) throw DimensionError(std::string(who) + ": coefficient and observations differ in dimension");
}

std::vector<Point> to_points(const std::vector<double>& xs) {
  std::vector<Point> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(make_point(x));
  return out;
}

}  // namespace

HomogenizedForward1d::HomogenizedForward1d(TwoScaleCoefficient coeff, ObservationSpec spec, double source,
                                           std::size_t y_points, std::size_t x_panels)
    : coeff_(std::move(coeff)),
      spec_(std::move(spec)),
      source_(source),
      x_rule_(composite_gauss(0.0, 1.0, static_cast<int>(x_panels), 5)),
      y_rule_(periodic_midpoint(static_cast<int>(y_points))),
      table_(coeff_, to_points(x_rule_.nodes), to_points(y_rule_.nodes)) {
  if (coeff_.dim() != 1 || spec_.dim != 1) throw DimensionError("HomogenizedForward1d: one-dimensional problems only");
  const std::size_t nx = x_rule_.size(), ny = y_rule_.size();
  weight_.assign(spec_.size(), std::vector<double>(nx * ny));
  for (std::size_t i = 0; i < spec_.size(); ++i) {
    const auto& w = spec_.functionals[i].weight;
    for (std::size_t qx = 0; qx < nx; ++qx)
      for (std::size_t qy = 0; qy < ny; ++qy)
        weight_[i][qx * ny + qy] = x_rule_.weights[qx] * y_rule_.weights[qy] *
                                   w.value(make_point(x_rule_.nodes[qx]), make_point(y_rule_.nodes[qy]));
  }
}

std::vector<double> HomogenizedForward1d::evaluate(const ParameterVector& z) const {
  coeff_.check_parameter(z);
  const std::size_t nx = x_rule_.size(), ny = y_rule_.size();
  const std::vector<double> a = table_.evaluate(z);
  std::vector<double> inv_a(a.size());
  double i1 = 0.0, ix = 0.0;
  for (std::size_t qx = 0; qx < nx; ++qx) {
    double inv_a0 = 0.0;
    for (std::size_t qy = 0; qy < ny; ++qy) {
      inv_a[qx * ny + qy] = 1.0 / a[qx * ny + qy];
      inv_a0 += y_rule_.weights[qy] * inv_a[qx * ny + qy];
    }
    i1 += x_rule_.weights[qx] * inv_a0;
    ix += x_rule_.weights[qx] * x_rule_.nodes[qx] * inv_a0;
  }
  const double c0 = source_ * ix / i1;
  std::vector<double> out(spec_.size(), 0.0);
  for (std::size_t i = 0; i < spec_.size(); ++i) {
    const bool flux = spec_.functionals[i].kind == ObservationFunctional::Kind::flux;
    const auto& w = weight_[i];
    double s = 0.0;
    for (std::size_t qx = 0; qx < nx; ++qx) {
      const double q = c0 - source_ * x_rule_.nodes[qx];
      double row = 0.0;
      for (std::size_t qy = 0; qy < ny; ++qy) row += w[qx * ny + qy] * (flux ? 1.0 : inv_a[qx * ny + qy]);
      s += q * row;
    }
    out[i] = s;
  }
  return out;
}

EpsilonForward1d::EpsilonForward1d(TwoScaleCoefficient coeff, ObservationSpec spec, double epsilon, double source,
                                   double tolerance)
    : coeff_(std::move(coeff)), spec_(std::move(spec)), epsilon_(epsilon), source_(source), tolerance_(tolerance) {
  if (coeff_.dim() != 1 || spec_.dim != 1) throw DimensionError("EpsilonForward1d: one-dimensional problems only");
  EpsilonProblem{&coeff_, {}, epsilon_, source_}.validate();
}

std::vector<double> EpsilonForward1d::evaluate(const ParameterVector& z) const {
  const EpsilonProblem p{&coeff_, z, epsilon_, source_};
  return forward_map_eps(spec_, solve_eps_1d_exact(p, tolerance_));
}

EpsilonForwardFem::EpsilonForwardFem(TwoScaleCoefficient coeff, ObservationSpec spec, double epsilon,
                                     std::size_t resolution, double source, CgOptions cg)
    : coeff_(std::move(coeff)),
      spec_(std::move(spec)),
      epsilon_(epsilon),
      resolution_(resolution),
      source_(source),
      cg_(cg) {
  require_dims(coeff_, spec_, "EpsilonForwardFem");
  EpsilonProblem{&coeff_, {}, epsilon_, source_, static_cast<int>(resolution_)}.validate();
}

std::vector<double> EpsilonForwardFem::evaluate(const ParameterVector& z) const {
  const EpsilonProblem p{&coeff_, z, epsilon_, source_, static_cast<int>(resolution_)};
  return forward_map_eps(spec_, solve_eps_fem(p, cg_), coeff_, z, epsilon_);
}

TwoScaleFeForward::TwoScaleFeForward(TwoScaleCoefficient coeff, ObservationSpec spec, int level, TensorMode mode,
                                     double source, CgOptions cg)
    : coeff_(std::move(coeff)), spec_(std::move(spec)), space_(coeff_.dim(), level, mode), source_(source), cg_(cg) {
  require_dims(coeff_, spec_, "TwoScaleFeForward");
}

std::vector<double> TwoScaleFeForward::evaluate(const ParameterVector& z) const {
  TwoScaleSolveOptions opt;
  opt.source = source_;
  opt.cg = cg_;
  return forward_map_homogenized(spec_, solve_two_scale(space_, coeff_, z, opt), coeff_, z);
}

CellHomogenizedForward::CellHomogenizedForward(TwoScaleCoefficient coeff, ObservationSpec spec,
                                               std::size_t grid_intervals, int cell_level, int macro_level,
                                               double source, CgOptions cg)
    : coeff_(std::move(coeff)),
      spec_(std::move(spec)),
      grid_{coeff_.dim(), grid_intervals},
      cell_level_(cell_level),
      macro_level_(macro_level),
      source_(source),
      cg_(cg) {
  require_dims(coeff_, spec_, "CellHomogenizedForward");
  if (grid_intervals < 1) throw ConfigError("CellHomogenizedForward: macro grid needs at least one interval");
}

std::vector<double> CellHomogenizedForward::evaluate(const ParameterVector& z) const {
  CellSolveOptions opt;
  opt.cg = cg_;
  const auto cells = solve_cell_problems(coeff_, z, grid_, cell_level_, opt);
  const auto u0 = solve_homogenized(homogenized_tensor(coeff_, z, cells), macro_level_, source_);
  return forward_map_homogenized(spec_, u0, cells);
}

}  // namespace twoscale
