#include <doctest.h>

#include <cmath>
#include <numbers>

#include "twoscale/catalogue.hpp"
#include "twoscale/coefficient.hpp"

using namespace twoscale;

namespace {

SeparableSum constant_mean(int dim, double c) { return SeparableSum{{SeparableTerm::constant(dim, c)}}; }

}  // namespace

TEST_CASE("uniform coefficient evaluates the affine expansion") {
  const auto terms = resolve_terms({"sin_y", "u1_cos:0.5"}, 1);
  const auto a = TwoScaleCoefficient::uniform(1, constant_mean(1, 4.0), terms);
  const double pi = std::numbers::pi;
  const ParameterVector z{0.3, -0.7};
  const Point x = make_point(0.2), y = make_point(0.65);
  const double expect = 4.0 + 0.3 * std::sin(2 * pi * 0.65) - 0.7 * 0.5 * 1.2 * std::cos(2 * pi * 0.65);
  CHECK(a.eval(z, x, y) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(a.sum_sup_norms() == doctest::Approx(1.0 + 0.5 * 2.0));
  // Default kappa is the smallest admissible one: sum b = kappa/(1+kappa) inf Abar.
  CHECK(a.kappa() / (1 + a.kappa()) * 4.0 == doctest::Approx(2.0));
}

TEST_CASE("uniform coercivity bounds hold on the whole parameter box") {
  const auto terms = resolve_terms({"sin_y", "cos_y", "u1_sin:0.3"}, 1);
  const auto a = TwoScaleCoefficient::uniform(1, constant_mean(1, 5.0), terms, 3.0);
  std::mt19937_64 rng(11);
  for (int s = 0; s < 50; ++s) {
    const auto z = sample_prior(PriorKind::uniform, terms.size(), rng);
    const auto b = a.coercivity_bounds(z);
    for (double x : {0.0, 0.3, 1.0})
      for (double y : {0.0, 0.1, 0.25, 0.6, 0.9}) {
        const double v = a.eval(z, make_point(x), make_point(y));
        CHECK(v >= b.lower);
        CHECK(v <= b.upper);
      }
  }
}

TEST_CASE("uniform admissibility is enforced") {
  const auto terms = resolve_terms({"sin_y", "cos_y"}, 1);
  CHECK_THROWS_AS(TwoScaleCoefficient::uniform(1, constant_mean(1, 2.0), terms), NumericalError);
  // kappa = 1 allows sum b <= inf/2 only.
  CHECK_THROWS_AS(TwoScaleCoefficient::uniform(1, constant_mean(1, 3.0), terms, 1.0), NumericalError);
  CHECK_NOTHROW(TwoScaleCoefficient::uniform(1, constant_mean(1, 4.0), terms, 1.0));
}

TEST_CASE("parameter checks") {
  const auto a = TwoScaleCoefficient::uniform(1, constant_mean(1, 4.0), resolve_terms({"sin_y"}, 1));
  CHECK_THROWS_AS(a.eval(ParameterVector{0.1, 0.2}, make_point(0.1), make_point(0.1)), DimensionError);
  CHECK_THROWS_AS(a.eval(ParameterVector{NAN}, make_point(0.1), make_point(0.1)), NumericalError);
}

TEST_CASE("log-gaussian coefficient is positive with matching bounds") {
  const auto terms = resolve_terms({"@lg2"}, 2);
  CHECK(terms.size() == 80);
  const auto a = TwoScaleCoefficient::log_gaussian(2, constant_mean(2, 0.5), constant_mean(2, 0.0), terms);
  const auto z = sample_prior(PriorKind::gaussian, terms.size(), 5);
  const auto b = a.coercivity_bounds(z);
  CHECK(b.lower > 0.5);
  for (double t : {0.05, 0.4, 0.77}) {
    const double v = a.eval(z, make_point(t, 1 - t), make_point(1 - t, t));
    CHECK(v >= b.lower);
    CHECK(v <= b.upper);
  }
}

TEST_CASE("coefficient table matches pointwise evaluation") {
  const auto terms = resolve_terms({"@u2"}, 2);
  const auto a = TwoScaleCoefficient::uniform(2, constant_mean(2, 8.0), terms);
  std::vector<Point> xs{make_point(0.1, 0.2), make_point(0.7, 0.9)};
  std::vector<Point> ys{make_point(0.0, 0.0), make_point(0.3, 0.8), make_point(0.55, 0.12)};
  CoefficientTable table(a, xs, ys);
  const auto z = sample_prior(PriorKind::uniform, terms.size(), 9);
  const auto v = table.evaluate(z);
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) CHECK(v[i * ys.size() + j] == doctest::Approx(a.eval(z, xs[i], ys[j])));
}

TEST_CASE("catalogue resolution") {
  CHECK(resolve_terms({"@u1"}, 1).size() == 2);
  CHECK(resolve_functionals({"@o2"}, 2).size() == 72);
  CHECK(resolve_functionals({"@olg"}, 2).size() == 1250);
  CHECK_THROWS_AS(resolve_terms({"nope"}, 1), ConfigError);
  CHECK_THROWS_AS(resolve_terms({"const2"}, 1), ConfigError);
  CHECK_THROWS_AS(resolve_terms({"sin_y:abc"}, 1), ConfigError);
  CHECK_THROWS_AS(resolve_functionals({"flux2_p1"}, 1), ConfigError);
  const auto scaled = resolve_terms({"lam_y:2.5"}, 1);
  CHECK(scaled[0].sup_norm == doctest::Approx(2.5 * std::tanh(10.0)));
  const std::string listing = list_catalogue();
  CHECK(listing.find("lg2_9_9") != std::string::npos);
  CHECK(listing.find("@olg") != std::string::npos);
}

TEST_CASE("laminate profile takes the two phase values") {
  const auto t = resolve_terms({"lam_y"}, 1)[0];
  CHECK(t.psi.value(make_point(0.3), make_point(0.25)) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(t.psi.value(make_point(0.3), make_point(0.75)) == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(t.psi.value(make_point(0.3), make_point(0.5)) == doctest::Approx(0.0).epsilon(1e-12));
}
