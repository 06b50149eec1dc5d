#include <doctest.h>

#include <cmath>
#include <numbers>

#include "twoscale/quadrature.hpp"

using namespace twoscale;

namespace {

double integrate(const Rule1d& r, auto f) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * f(r.nodes[i]);
  return s;
}

}  // namespace

TEST_CASE("gauss rules integrate monomials up to degree 2n-1 exactly") {
  for (int n = 1; n <= 6; ++n) {
    const Rule1d r = gauss_legendre(n);
    CHECK(r.size() == static_cast<std::size_t>(n));
    for (int p = 0; p <= 2 * n - 1; ++p) {
      CAPTURE(n);
      CAPTURE(p);
      CHECK(integrate(r, [p](double t) { return std::pow(t, p); }) == doctest::Approx(1.0 / (p + 1)).epsilon(1e-14));
    }
    // One degree too many is not exact.
    CHECK(std::abs(integrate(r, [n](double t) { return std::pow(t, 2 * n); }) - 1.0 / (2 * n + 1)) > 1e-8);
  }
}

TEST_CASE("composite gauss covers the requested interval") {
  const Rule1d r = composite_gauss(0.25, 0.75, 4, 3);
  CHECK(r.size() == 12);
  CHECK(integrate(r, [](double) { return 1.0; }) == doctest::Approx(0.5));
  CHECK(integrate(r, [](double t) { return std::exp(t); }) == doctest::Approx(std::exp(0.75) - std::exp(0.25)).epsilon(1e-10));
}

TEST_CASE("periodic midpoint rule is spectrally accurate") {
  const Rule1d r = periodic_midpoint(32);
  const double pi = std::numbers::pi;
  CHECK(integrate(r, [pi](double t) { return std::cos(2 * pi * 5 * t) * std::cos(2 * pi * 5 * t); }) ==
        doctest::Approx(0.5).epsilon(1e-14));
  CHECK(integrate(r, [pi](double t) { return std::exp(std::sin(2 * pi * t)); }) ==
        doctest::Approx(1.2660658777520082).epsilon(1e-13));
}
