#pragma once

#include <functional>
#include <string>
#include <vector>

#include "twoscale/cell_problem.hpp"
#include "twoscale/coefficient.hpp"
#include "twoscale/observation.hpp"
#include "twoscale/quadrature.hpp"
#include "twoscale/two_scale.hpp"

namespace twoscale {

/// Parameter-to-observation map z -> G(z). evaluate() is const and safe to
/// call concurrently.
class ForwardModel {
 public:
  ForwardModel() = default;
  ForwardModel(const ForwardModel&) = delete;
  ForwardModel& operator=(const ForwardModel&) = delete;
  virtual ~ForwardModel() = default;

  virtual std::string name() const = 0;
  virtual std::size_t parameters() const = 0;
  virtual std::size_t observations() const = 0;
  virtual std::vector<double> evaluate(const ParameterVector& z) const = 0;
};

/// Wraps a plain function; used for toy targets and tests.
class FunctionForward final : public ForwardModel {
 public:
  using Map = std::function<std::vector<double>(const ParameterVector&)>;
  FunctionForward(std::size_t parameters, std::size_t observations, Map map, std::string name = "function")
      : j_(parameters), n_(observations), map_(std::move(map)), name_(std::move(name)) {}

  std::string name() const override { return name_; }
  std::size_t parameters() const override { return j_; }
  std::size_t observations() const override { return n_; }
  std::vector<double> evaluate(const ParameterVector& z) const override { return map_(z); }

 private:
  std::size_t j_, n_;
  Map map_;
  std::string name_;
};

/// Exact 1D homogenized limit. With A0(x) = (int_Y 1/A dy)^{-1} the
/// homogenized flux is C0 - f x, and grad u0 + d_y u1 = (C0 - f x) / A(x, y).
/// The y-integrals use the periodic midpoint rule, x uses composite Gauss.
class HomogenizedForward1d final : public ForwardModel {
 public:
  HomogenizedForward1d(TwoScaleCoefficient coeff, ObservationSpec spec, double source = 1.0,
                       std::size_t y_points = 256, std::size_t x_panels = 64);

  std::string name() const override { return "homogenized_1d"; }
  std::size_t parameters() const override { return coeff_.size(); }
  std::size_t observations() const override { return spec_.size(); }
  std::vector<double> evaluate(const ParameterVector& z) const override;

 private:
  TwoScaleCoefficient coeff_;
  ObservationSpec spec_;
  double source_;
  Rule1d x_rule_, y_rule_;
  CoefficientTable table_;
  std::vector<std::vector<double>> weight_;  // [i][qx * ny + qy], scale and quadrature weights folded in
};

/// 1D fine-scale map through the exact reduction.
class EpsilonForward1d final : public ForwardModel {
 public:
  EpsilonForward1d(TwoScaleCoefficient coeff, ObservationSpec spec, double epsilon, double source = 1.0,
                   double tolerance = 1e-10);

  std::string name() const override { return "epsilon_1d"; }
  std::size_t parameters() const override { return coeff_.size(); }
  std::size_t observations() const override { return spec_.size(); }
  std::vector<double> evaluate(const ParameterVector& z) const override;
  double epsilon() const { return epsilon_; }

 private:
  TwoScaleCoefficient coeff_;
  ObservationSpec spec_;
  double epsilon_, source_, tolerance_;
};

/// 2D fine-scale map through the fine-mesh FEM.
class EpsilonForwardFem final : public ForwardModel {
 public:
  EpsilonForwardFem(TwoScaleCoefficient coeff, ObservationSpec spec, double epsilon, std::size_t resolution,
                    double source = 1.0, CgOptions cg = {1e-10, 100000});

  std::string name() const override { return "epsilon_fem"; }
  std::size_t parameters() const override { return coeff_.size(); }
  std::size_t observations() const override { return spec_.size(); }
  std::vector<double> evaluate(const ParameterVector& z) const override;

 private:
  TwoScaleCoefficient coeff_;
  ObservationSpec spec_;
  double epsilon_;
  std::size_t resolution_;
  double source_;
  CgOptions cg_;
};

/// Two-scale Galerkin surrogate on the level-L full or sparse space.
class TwoScaleFeForward final : public ForwardModel {
 public:
  TwoScaleFeForward(TwoScaleCoefficient coeff, ObservationSpec spec, int level, TensorMode mode,
                    double source = 1.0, CgOptions cg = {1e-10, 20000});

  std::string name() const override { return "two_scale_fe"; }
  std::size_t parameters() const override { return coeff_.size(); }
  std::size_t observations() const override { return spec_.size(); }
  std::vector<double> evaluate(const ParameterVector& z) const override;
  int level() const { return space_.level(); }

 private:
  TwoScaleCoefficient coeff_;
  ObservationSpec spec_;
  TwoScaleSpace space_;
  double source_;
  CgOptions cg_;
};

/// Cell problems on a macro grid, Q1 homogenized solve, cell-route functionals.
class CellHomogenizedForward final : public ForwardModel {
 public:
  CellHomogenizedForward(TwoScaleCoefficient coeff, ObservationSpec spec, std::size_t grid_intervals,
                         int cell_level, int macro_level, double source = 1.0, CgOptions cg = {1e-10, 200000});

  std::string name() const override { return "cell_homogenized"; }
  std::size_t parameters() const override { return coeff_.size(); }
  std::size_t observations() const override { return spec_.size(); }
  std::vector<double> evaluate(const ParameterVector& z) const override;

 private:
  TwoScaleCoefficient coeff_;
  ObservationSpec spec_;
  MacroGrid grid_;
  int cell_level_, macro_level_;
  double source_;
  CgOptions cg_;
};

}  // namespace twoscale
