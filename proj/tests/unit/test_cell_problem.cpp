#include <doctest.h>

#include <cmath>
#include <numbers>

#include "twoscale/catalogue.hpp"
#include "twoscale/cell_problem.hpp"
#include "twoscale/quadrature.hpp"

using namespace twoscale;

namespace {

SeparableSum constant_mean(int dim, double c) { return SeparableSum{{SeparableTerm::constant(dim, c)}}; }

// A(y) = 9 + sin(2 pi y) as a one-term uniform family at z = 1.
TwoScaleCoefficient sine_cell() {
  return TwoScaleCoefficient::uniform(1, constant_mean(1, 9.0), resolve_terms({"sin_y"}, 1));
}

// Mollified laminate alpha/beta in y1, via lam_y1 with the given half-contrast.
TwoScaleCoefficient laminate(double mean, double half_contrast) {
  return TwoScaleCoefficient::uniform(2, constant_mean(2, mean),
                                      resolve_terms({"lam_y1:" + std::to_string(half_contrast)}, 2));
}

}  // namespace

TEST_CASE("constant coefficient has vanishing cell solutions and A0 = a I") {
  const auto a = TwoScaleCoefficient::uniform(2, constant_mean(2, 3.5), {});
  const MacroGrid grid{2, 1};
  const auto cells = solve_cell_problems(a, ParameterVector{}, grid, 3);
  for (std::size_t k = 0; k < grid.size(); ++k)
    for (int l = 0; l < 2; ++l)
      for (double v : cells.w(k, l)) CHECK(std::abs(v) < 1e-14);
  const auto a0 = homogenized_tensor(a, ParameterVector{}, cells);
  const auto t = a0.at(make_point(0.3, 0.6));
  CHECK(t[0] == doctest::Approx(3.5));
  CHECK(t[3] == doctest::Approx(3.5));
  CHECK(std::abs(t[1]) < 1e-14);
}

TEST_CASE("1D homogenized coefficient is the harmonic mean") {
  const auto a = sine_cell();
  const auto cells = solve_cell_problems(a, ParameterVector{1.0}, MacroGrid{1, 1}, 10);
  const auto a0 = homogenized_tensor(a, ParameterVector{1.0}, cells);
  CHECK(a0.at_point(0)[0] == doctest::Approx(std::sqrt(80.0)).epsilon(1e-9));
  CHECK(cells.max_residual() <= 1e-12);
}

TEST_CASE("1D cell solution reconstructs 1 + w' = A0 / A") {
  const auto a = sine_cell();
  const auto cells = solve_cell_problems(a, ParameterVector{1.0}, MacroGrid{1, 1}, 6);
  const double a0 = homogenized_tensor(a, ParameterVector{1.0}, cells).at_point(0)[0];
  const double pi = std::numbers::pi;
  const std::size_t n = cells.cells();
  for (std::size_t e = 0; e < n; e += 7) {
    const double y = (e + 0.5) / static_cast<double>(n);
    const double grad = cells.grad_y(0, make_point(0.0), make_point(y))[0];
    CHECK(1.0 + grad == doctest::Approx(a0 / (9.0 + std::sin(2 * pi * y))).epsilon(1e-12));
  }
}

TEST_CASE("cell solutions have zero mean and shift with the coefficient") {
  const auto a = TwoScaleCoefficient::uniform(1, constant_mean(1, 5.0), resolve_terms({"sin_y", "cos2_y"}, 1));
  const ParameterVector z{0.6, -0.3};
  const auto cells = solve_cell_problems(a, z, MacroGrid{1, 1}, 5);
  double mean = 0.0;
  for (double v : cells.w(0, 0)) mean += v;
  CHECK(std::abs(mean) < 1e-12);
  // A(y + 1/4): sin -> cos, cos(4 pi y) -> -cos(4 pi y).
  const auto shifted = TwoScaleCoefficient::uniform(1, constant_mean(1, 5.0), resolve_terms({"cos_y", "cos2_y"}, 1));
  const auto cs = solve_cell_problems(shifted, ParameterVector{0.6, 0.3}, MacroGrid{1, 1}, 5);
  const std::size_t n = cells.cells(), q = n / 4;
  for (std::size_t i = 0; i < n; ++i) CHECK(cs.w(0, 0)[i] == doctest::Approx(cells.w(0, 0)[(i + q) % n]).epsilon(1e-9));
}

TEST_CASE("laminate homogenized tensor is diag(harmonic, arithmetic)") {
  const auto a = laminate(6.0, 4.0);  // phases 10 and 2
  const auto cells = solve_cell_problems(a, ParameterVector{1.0}, MacroGrid{2, 1}, 5);
  const auto t = homogenized_tensor(a, ParameterVector{1.0}, cells).at_point(0);
  // Oracle: 1D means of the mollified profile by Gauss quadrature.
  const Rule1d r = composite_gauss(0.0, 1.0, 512, 4);
  const auto psi = resolve_terms({"lam_y1:4"}, 2)[0].psi;
  double harm = 0.0, arith = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double v = 6.0 + psi.value(make_point(0, 0), make_point(r.nodes[i], 0.3));
    harm += r.weights[i] / v;
    arith += r.weights[i] * v;
  }
  CHECK(t[0] == doctest::Approx(1.0 / harm).epsilon(2e-3));
  CHECK(t[3] == doctest::Approx(arith).epsilon(2e-3));
  CHECK(std::abs(t[1]) < 1e-10);
  CHECK(t[1] == t[2]);
}

TEST_CASE("homogenized tensor is symmetric and coercive for a genuinely 2D cell") {
  const auto terms = resolve_terms({"u2_s1_c1", "u2_c1_s1", "u2_s2q_c2q", "lam_y2:2"}, 2);
  const auto a = TwoScaleCoefficient::uniform(2, constant_mean(2, 10.0), terms);
  const ParameterVector z{0.9, -0.8, 0.7, 0.5};
  const MacroGrid grid{2, 2};
  const auto cells = solve_cell_problems(a, z, grid, 4);
  const auto field = homogenized_tensor(a, z, cells);
  const double c_low = a.coercivity_bounds(z).lower;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto& t = field.at_point(k);
    CHECK(t[1] == t[2]);
    for (double th = 0.0; th < 3.2; th += 0.4) {
      const double xi[2] = {std::cos(th), std::sin(th)};
      const double q = t[0] * xi[0] * xi[0] + 2 * t[1] * xi[0] * xi[1] + t[3] * xi[1] * xi[1];
      CHECK(q >= 0.99 * c_low);
    }
  }
}

TEST_CASE("homogenized tensor converges at second order in the cell level") {
  const auto a = TwoScaleCoefficient::uniform(2, constant_mean(2, 10.0), resolve_terms({"u2_s1_c1", "u2_c2q_s1"}, 2));
  const ParameterVector z{1.0, -1.0};
  std::vector<double> v;
  for (int L = 2; L <= 5; ++L) {
    const auto cells = solve_cell_problems(a, z, MacroGrid{2, 1}, L);
    v.push_back(homogenized_tensor(a, z, cells).at_point(3)[0]);
  }
  for (std::size_t i = 0; i + 2 < v.size(); ++i) CHECK(std::abs(v[i] - v[i + 1]) / std::abs(v[i + 1] - v[i + 2]) >= 3.0);
}

TEST_CASE("serial and parallel cell solves agree") {
  const auto a = laminate(6.0, 2.0);
  const auto s = solve_cell_problems(a, ParameterVector{0.5}, MacroGrid{2, 2}, 3, {{1e-12, 100000}, Execution::serial});
  const auto p = solve_cell_problems(a, ParameterVector{0.5}, MacroGrid{2, 2}, 3, {{1e-12, 100000}, Execution::parallel});
  for (std::size_t k = 0; k < 9; ++k) CHECK(s.w(k, 0) == p.w(k, 0));
}

TEST_CASE("corrector field vanishes with zero gradient and has mean-free y-gradient") {
  const auto a = sine_cell();
  const auto cells = solve_cell_problems(a, ParameterVector{1.0}, MacroGrid{1, 2}, 5);
  const CorrectorField zero(cells, std::vector<std::array<double, 2>>(3, {0.0, 0.0}));
  CHECK(zero.value(make_point(0.4), make_point(0.3)) == 0.0);
  const CorrectorField u1(cells, {{1.0, 0.0}, {-0.5, 0.0}, {2.0, 0.0}});
  const std::size_t n = cells.cells();
  double integral = 0.0;
  for (std::size_t e = 0; e < n; ++e) integral += u1.grad_y(make_point(0.3), make_point((e + 0.5) / n))[0] / n;
  CHECK(std::abs(integral) < 1e-13);
}

TEST_CASE("mismatched parameter is rejected when forming A0") {
  const auto a = sine_cell();
  const auto cells = solve_cell_problems(a, ParameterVector{1.0}, MacroGrid{1, 1}, 3);
  CHECK_THROWS_AS(homogenized_tensor(a, ParameterVector{0.5}, cells), DimensionError);
}

TEST_CASE("csv dumps") {
  const auto a = laminate(6.0, 2.0);
  const auto cells = solve_cell_problems(a, ParameterVector{0.5}, MacroGrid{2, 1}, 1);
  CHECK(cell_solution_csv(cells, 0).rfind("y1,y2,w1,w2\n", 0) == 0);
  CHECK(homogenized_tensor_csv(homogenized_tensor(a, ParameterVector{0.5}, cells)).rfind("x1,x2,a0_11", 0) == 0);
}
