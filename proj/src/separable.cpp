#include "twoscale/separable.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace twoscale {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Dense sampling for the smooth_sign derivative bounds; diagnostics only.
double sampled_sup(const Factor1d& f, int order) {
  double m = 0.0;
  constexpr int n = 8192;
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    double v = order == 0 ? f.value(t) : order == 1 ? f.derivative(t) : f.second_derivative(t);
    m = std::max(m, std::abs(v));
  }
  return m;
}

}  // namespace

double Factor1d::value(double t) const {
  switch (kind) {
    case Kind::one: return 1.0;
    case Kind::linear: return t;
    case Kind::square: return t * t;
    case Kind::one_plus: return 1.0 + t;
    case Kind::sin: return std::sin(kTwoPi * k * t);
    case Kind::cos: return std::cos(kTwoPi * k * t);
    case Kind::one_plus_sin: return 1.0 + std::sin(kTwoPi * k * t);
    case Kind::one_plus_cos: return 1.0 + std::cos(kTwoPi * k * t);
    case Kind::smooth_sign: return std::tanh(std::sin(kTwoPi * t) / width);
  }
  return 0.0;
}

double Factor1d::derivative(double t) const {
  const double w = kTwoPi * k;
  switch (kind) {
    case Kind::one: return 0.0;
    case Kind::linear: return 1.0;
    case Kind::square: return 2.0 * t;
    case Kind::one_plus: return 1.0;
    case Kind::sin:
    case Kind::one_plus_sin: return w * std::cos(w * t);
    case Kind::cos:
    case Kind::one_plus_cos: return -w * std::sin(w * t);
    case Kind::smooth_sign: {
      const double th = std::tanh(std::sin(kTwoPi * t) / width);
      return (1.0 - th * th) * kTwoPi * std::cos(kTwoPi * t) / width;
    }
  }
  return 0.0;
}

double Factor1d::second_derivative(double t) const {
  const double w = kTwoPi * k;
  switch (kind) {
    case Kind::one:
    case Kind::linear:
    case Kind::one_plus: return 0.0;
    case Kind::square: return 2.0;
    case Kind::sin:
    case Kind::one_plus_sin: return -w * w * std::sin(w * t);
    case Kind::cos:
    case Kind::one_plus_cos: return -w * w * std::cos(w * t);
    case Kind::smooth_sign: {
      const double s = std::sin(kTwoPi * t) / width;
      const double ds = kTwoPi * std::cos(kTwoPi * t) / width;
      const double dds = -kTwoPi * kTwoPi * std::sin(kTwoPi * t) / width;
      const double th = std::tanh(s);
      const double sech2 = 1.0 - th * th;
      return sech2 * dds - 2.0 * th * sech2 * ds * ds;
    }
  }
  return 0.0;
}

double Factor1d::sup_abs() const {
  switch (kind) {
    case Kind::one:
    case Kind::linear:
    case Kind::square:
    case Kind::sin:
    case Kind::cos: return 1.0;
    case Kind::one_plus:
    case Kind::one_plus_sin:
    case Kind::one_plus_cos: return 2.0;
    case Kind::smooth_sign: return std::tanh(1.0 / width);
  }
  return 0.0;
}

double Factor1d::sup_abs_derivative() const {
  switch (kind) {
    case Kind::one: return 0.0;
    case Kind::linear:
    case Kind::one_plus: return 1.0;
    case Kind::square: return 2.0;
    case Kind::sin:
    case Kind::cos:
    case Kind::one_plus_sin:
    case Kind::one_plus_cos: return kTwoPi * k;
    case Kind::smooth_sign: return sampled_sup(*this, 1);
  }
  return 0.0;
}

double Factor1d::sup_abs_second_derivative() const {
  switch (kind) {
    case Kind::one:
    case Kind::linear:
    case Kind::one_plus: return 0.0;
    case Kind::square: return 2.0;
    case Kind::sin:
    case Kind::cos:
    case Kind::one_plus_sin:
    case Kind::one_plus_cos: return kTwoPi * k * kTwoPi * k;
    case Kind::smooth_sign: return sampled_sup(*this, 2);
  }
  return 0.0;
}

bool Factor1d::periodic() const {
  return kind != Kind::linear && kind != Kind::square && kind != Kind::one_plus;
}

std::string Factor1d::formula(const std::string& var) const {
  std::ostringstream os;
  const std::string arg = (k == 1 ? "2*pi*" : std::to_string(2 * k) + "*pi*") + var;
  switch (kind) {
    case Kind::one: os << "1"; break;
    case Kind::linear: os << var; break;
    case Kind::square: os << var << "^2"; break;
    case Kind::one_plus: os << "(1+" << var << ")"; break;
    case Kind::sin: os << "sin(" << arg << ")"; break;
    case Kind::cos: os << "cos(" << arg << ")"; break;
    case Kind::one_plus_sin: os << "(1+sin(" << arg << "))"; break;
    case Kind::one_plus_cos: os << "(1+cos(" << arg << "))"; break;
    case Kind::smooth_sign:
      os << "tanh(sin(2*pi*" << var << ")/" << width << ")";
      break;
  }
  return os.str();
}

double SeparableTerm::value(const Point& x, const Point& y) const {
  double v = scale;
  for (int i = 0; i < dim; ++i) v *= x_factors[i].value(x[i]) * y_factors[i].value(y[i]);
  return v;
}

double SeparableTerm::dy(const Point& x, const Point& y, int p) const {
  double v = scale;
  for (int i = 0; i < dim; ++i) {
    v *= x_factors[i].value(x[i]);
    v *= (i == p) ? y_factors[i].derivative(y[i]) : y_factors[i].value(y[i]);
  }
  return v;
}

double SeparableTerm::sup_abs() const {
  double v = std::abs(scale);
  for (int i = 0; i < dim; ++i) v *= x_factors[i].sup_abs() * y_factors[i].sup_abs();
  return v;
}

double SeparableTerm::c11_norm() const {
  // Enumerate derivative orders: one x-derivative on at most one axis, up to
  // two y-derivatives distributed over the y axes.
  auto fx = [&](int axis, int order) {
    return order == 0 ? x_factors[axis].sup_abs() : x_factors[axis].sup_abs_derivative();
  };
  auto fy = [&](int axis, int order) {
    switch (order) {
      case 0: return y_factors[axis].sup_abs();
      case 1: return y_factors[axis].sup_abs_derivative();
      default: return y_factors[axis].sup_abs_second_derivative();
    }
  };
  double best = 0.0;
  const int ax_options = dim + 1;  // no x-derivative, or on axis a
  for (int ax = 0; ax < ax_options; ++ax) {
    for (int oy0 = 0; oy0 <= 2; ++oy0) {
      for (int oy1 = 0; oy1 <= (dim == 2 ? 2 - oy0 : 0); ++oy1) {
        double v = std::abs(scale);
        for (int i = 0; i < dim; ++i) v *= fx(i, ax == i + 1 ? 1 : 0);
        v *= fy(0, oy0);
        if (dim == 2) v *= fy(1, oy1);
        best = std::max(best, v);
      }
    }
  }
  return best;
}

bool SeparableTerm::y_periodic() const {
  for (int i = 0; i < dim; ++i)
    if (!y_factors[i].periodic()) return false;
  return true;
}

std::string SeparableTerm::formula() const {
  std::ostringstream os;
  os << scale;
  static const char* xs[] = {"x1", "x2"};
  static const char* ys[] = {"y1", "y2"};
  for (int i = 0; i < dim; ++i) {
    const std::string xv = dim == 1 ? "x" : xs[i];
    if (x_factors[i].kind != Factor1d::Kind::one) os << "*" << x_factors[i].formula(xv);
  }
  for (int i = 0; i < dim; ++i) {
    const std::string yv = dim == 1 ? "y" : ys[i];
    if (y_factors[i].kind != Factor1d::Kind::one) os << "*" << y_factors[i].formula(yv);
  }
  return os.str();
}

SeparableTerm SeparableTerm::constant(int dim, double c) {
  SeparableTerm t;
  t.dim = dim;
  t.scale = c;
  return t;
}

}  // namespace twoscale
