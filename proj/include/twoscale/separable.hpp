#pragma once

#include <array>
#include <string>
#include <vector>

#include "twoscale/types.hpp"

namespace twoscale {

/// One-dimensional closed-form factor on [0, 1]. Coefficient terms and
/// observation weights are products of these, which keeps every sup-norm
/// computable in closed form.
struct Factor1d {
  enum class Kind {
    one,           // 1
    linear,        // t
    square,        // t^2
    one_plus,      // 1 + t
    sin,           // sin(2 pi k t)
    cos,           // cos(2 pi k t)
    one_plus_sin,  // 1 + sin(2 pi k t)
    one_plus_cos,  // 1 + cos(2 pi k t)
    smooth_sign,   // tanh(sin(2 pi t) / width), a mollified +-1 laminate profile
  };

  Kind kind = Kind::one;
  int k = 1;
  double width = 0.1;  // smooth_sign only

  double value(double t) const;
  double derivative(double t) const;
  double second_derivative(double t) const;

  /// sup over [0,1] of |f|, |f'|, |f''|.
  double sup_abs() const;
  double sup_abs_derivative() const;
  double sup_abs_second_derivative() const;

  bool periodic() const;
  std::string formula(const std::string& var) const;

  static Factor1d one() { return {Kind::one, 0, 0.1}; }
  static Factor1d linear() { return {Kind::linear, 0, 0.1}; }
  static Factor1d square() { return {Kind::square, 0, 0.1}; }
  static Factor1d one_plus() { return {Kind::one_plus, 0, 0.1}; }
  static Factor1d sin(int k) { return {Kind::sin, k, 0.1}; }
  static Factor1d cos(int k) { return {Kind::cos, k, 0.1}; }
  static Factor1d one_plus_sin(int k) { return {Kind::one_plus_sin, k, 0.1}; }
  static Factor1d one_plus_cos(int k) { return {Kind::one_plus_cos, k, 0.1}; }
  static Factor1d smooth_sign(double width) { return {Kind::smooth_sign, 1, width}; }

  friend bool operator==(const Factor1d&, const Factor1d&) = default;
};

/// scale * prod_i fx_i(x_i) * prod_i fy_i(y_i) on D x Y, d in {1, 2}.
struct SeparableTerm {
  int dim = 1;
  double scale = 1.0;
  std::array<Factor1d, 2> x_factors{Factor1d::one(), Factor1d::one()};
  std::array<Factor1d, 2> y_factors{Factor1d::one(), Factor1d::one()};

  double value(const Point& x, const Point& y) const;
  /// Partial derivative in y_p.
  double dy(const Point& x, const Point& y, int p) const;

  /// sup over D x Y of |psi|.
  double sup_abs() const;
  /// max over |a0| <= 1, |a1| <= 2 of sup |d^a0_x d^a1_y psi|.
  double c11_norm() const;

  bool y_periodic() const;
  std::string formula() const;

  static SeparableTerm constant(int dim, double c);
};

/// Sum of separable terms (used for mean and offset fields).
struct SeparableSum {
  std::vector<SeparableTerm> terms;

  double value(const Point& x, const Point& y) const {
    double v = 0.0;
    for (const auto& t : terms) v += t.value(x, y);
    return v;
  }
  bool empty() const { return terms.empty(); }
};

}  // namespace twoscale
