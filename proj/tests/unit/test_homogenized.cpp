#include <doctest.h>

#include <cmath>

#include "twoscale/catalogue.hpp"
#include "twoscale/homogenized.hpp"
#include "twoscale/two_scale.hpp"

using namespace twoscale;

namespace {

std::array<double, 4> identity(const Point&) { return {1.0, 0.0, 0.0, 1.0}; }

SeparableSum constant_mean(int dim, double c) { return SeparableSum{{SeparableTerm::constant(dim, c)}}; }

}  // namespace

TEST_CASE("identity tensor gives the nodally exact 1D Poisson solution") {
  const auto u = solve_homogenized(identity, 1, 4);
  for (std::size_t i = 0; i <= u.cells(); ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(u.cells());
    CHECK(u.nodal[i] == doctest::Approx(0.5 * x * (1 - x)).epsilon(1e-12));
  }
}

TEST_CASE("homogenized solve is linear in the source") {
  const TensorFunction a0 = [](const Point& x) { return std::array<double, 4>{2.0 + x[0], 0.3, 0.3, 1.5 + x[1]}; };
  const auto u1 = solve_homogenized(a0, 2, 3, 1.0);
  const auto u2 = solve_homogenized(a0, 2, 3, 2.0);
  for (std::size_t i = 0; i < u1.nodal.size(); ++i) CHECK(u2.nodal[i] == doctest::Approx(2.0 * u1.nodal[i]));
}

TEST_CASE("2D homogenized and two-scale solvers coincide for a y-independent coefficient") {
  const auto a = TwoScaleCoefficient::uniform(2, constant_mean(2, 1.0), {});
  const TwoScaleSpace space(2, 3, TensorMode::full);
  const auto ts = solve_two_scale(space, a, ParameterVector{});
  const auto u = solve_homogenized(identity, 2, 3);
  for (std::size_t i = 0; i < u.nodal.size(); ++i) CHECK(u.nodal[i] == doctest::Approx(ts.u0_nodal[i]).epsilon(1e-8));
}

TEST_CASE("cell route and two-scale route agree under refinement") {
  const auto a = TwoScaleCoefficient::uniform(1, constant_mean(1, 9.0), resolve_terms({"@u1"}, 1));
  const ParameterVector z{1.0, 0.0};
  const auto cells = solve_cell_problems(a, z, MacroGrid{1, 32}, 8);
  const auto field = homogenized_tensor(a, z, cells);
  double prev = 1e300;
  for (int L = 2; L <= 5; ++L) {
    const auto hom = solve_homogenized(field, L);
    const TwoScaleSpace space(1, L, TensorMode::full);
    const auto ts = solve_two_scale(space, a, z);
    double diff = 0.0;
    const std::size_t n = hom.cells();
    for (std::size_t e = 0; e < n; ++e) {
      const Point x = make_point((e + 0.5) / n);
      const double g = hom.gradient(x)[0] - ts.grad_u0(x)[0];
      diff += g * g / n;
    }
    diff = std::sqrt(diff);
    CHECK(diff < prev);
    prev = diff;
  }
  CHECK(prev < 5e-3);
}

TEST_CASE("macro field csv") {
  const auto u = solve_homogenized(identity, 2, 0);
  CHECK(macro_field_csv(u).rfind("x1,x2,u0\n", 0) == 0);
}
