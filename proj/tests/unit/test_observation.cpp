#include <doctest.h>

#include <cmath>
#include <numbers>

#include "twoscale/observation.hpp"

using namespace twoscale;

namespace {

SeparableSum constant_mean(int dim, double c) { return SeparableSum{{SeparableTerm::constant(dim, c)}}; }

TwoScaleSolution two_scale(const TwoScaleCoefficient& a, const ParameterVector& z, int level, double source = 1.0) {
  const TwoScaleSpace space(a.dim(), level, TensorMode::full);
  TwoScaleSolveOptions opt;
  opt.source = source;
  opt.cg.relative_tolerance = 1e-12;
  return solve_two_scale(space, a, z, opt);
}

}  // namespace

TEST_CASE("unit coefficient with weight x gives -1/12") {
  const auto a = TwoScaleCoefficient::uniform(1, constant_mean(1, 1.0), {});
  const auto spec = ObservationSpec::from_ids({"x", "xs1", "one"}, 1);
  const auto sol = two_scale(a, ParameterVector{}, 6);
  const auto g = forward_map_homogenized(spec, sol, a, ParameterVector{});
  CHECK(g[0] == doctest::Approx(-1.0 / 12).epsilon(1e-3));
  // y-weights with unit mean and no corrector leave the value unchanged.
  CHECK(g[1] == doctest::Approx(g[0]).epsilon(1e-10));
  CHECK(std::abs(g[2]) < 1e-12);

  const EpsilonProblem p{&a, ParameterVector{}, 1.0 / 8};
  const auto ge = forward_map_eps(spec, solve_eps_1d_exact(p));
  CHECK(ge[0] == doctest::Approx(-1.0 / 12).epsilon(1e-9));
  // int_0^1 (x/2 - x^2) sin(w x) dx = 1 / (2 w) for w a multiple of 2 pi.
  CHECK(ge[1] == doctest::Approx(-1.0 / 12 + 1.0 / (32 * std::numbers::pi)).epsilon(1e-9));
}

TEST_CASE("1D routes agree for an oscillating coefficient") {
  const auto a = TwoScaleCoefficient::uniform(1, constant_mean(1, 9.0), resolve_terms({"@u1"}, 1));
  const ParameterVector z{0.7, -0.4};
  const auto spec = ObservationSpec::from_ids({"x", "x2", "xs1", "xc1", "flux"}, 1);
  const auto fe = forward_map_homogenized(spec, two_scale(a, z, 8), a, z);
  const auto cells = solve_cell_problems(a, z, MacroGrid{1, 64}, 9);
  const auto u0 = solve_homogenized(homogenized_tensor(a, z, cells), 8);
  const auto cell = forward_map_homogenized(spec, u0, cells);
  const EpsilonProblem p{&a, z, 1.0 / 256};
  const auto eps = forward_map_eps(spec, solve_eps_1d_exact(p));
  for (std::size_t i = 0; i < spec.size(); ++i) {
    INFO("functional " << spec.functionals[i].id);
    CHECK(std::abs(fe[i] - cell[i]) < 2e-3 * std::max(1e-3, std::abs(fe[i])));
    // O(eps) homogenization error.
    CHECK(std::abs(fe[i] - eps[i]) < 2e-2 * std::max(1e-2, std::abs(fe[i])));
  }
}

TEST_CASE("fine FEM route matches the exact 1D solution") {
  const auto a = TwoScaleCoefficient::uniform(1, constant_mean(1, 9.0), resolve_terms({"@u1"}, 1));
  const ParameterVector z{0.3, 0.9};
  const auto spec = ObservationSpec::from_ids({"x", "xs1", "flux"}, 1);
  EpsilonProblem p{&a, z, 1.0 / 8};
  p.resolution = 64;
  const auto fem = forward_map_eps(spec, solve_eps_fem(p), a, z, p.epsilon);
  const auto exact = forward_map_eps(spec, solve_eps_1d_exact(p));
  for (std::size_t i = 0; i < spec.size(); ++i) CHECK(fem[i] == doctest::Approx(exact[i]).epsilon(1e-3).scale(1e-3));
}

TEST_CASE("flux is invariant under a phase rotation of the parameter") {
  const auto a = TwoScaleCoefficient::uniform(1, constant_mean(1, 9.0), resolve_terms({"@u1"}, 1));
  const auto spec = ObservationSpec::from_ids({"flux", "xs1"}, 1);
  const double r = 0.8, phi0 = 0.3;
  std::vector<double> flux, grad;
  for (int k = 0; k < 8; ++k) {
    // Shifting y by k/8 maps (sin, cos) coefficients by a rotation of 2 pi k / 8.
    const double t = phi0 + 2 * std::numbers::pi * k / 8;
    const ParameterVector z{r * std::cos(t), r * std::sin(t)};
    const auto g = forward_map_homogenized(spec, two_scale(a, z, 5), a, z);
    flux.push_back(g[0]);
    grad.push_back(g[1]);
  }
  double spread = 0.0;
  for (int k = 1; k < 8; ++k) {
    CHECK(flux[k] == doctest::Approx(flux[0]).epsilon(1e-8).scale(1e-8));
    spread = std::max(spread, std::abs(grad[k] - grad[0]));
  }
  CHECK(spread > 1e-4);
}

TEST_CASE("2D routes agree") {
  const auto a = TwoScaleCoefficient::uniform(2, constant_mean(2, 8.0), resolve_terms({"@u2"}, 2));
  ParameterVector z(std::vector<double>(a.size(), 0.0));
  z[0] = 0.6, z[1] = -0.5, z[3] = 0.4;
  const auto spec = ObservationSpec::from_ids({"o2_s1_c1_p1", "o2_c1_s2_p2", "flux2_p1", "flux2_p2"}, 2);
  const auto fe = forward_map_homogenized(spec, two_scale(a, z, 3), a, z);
  const auto cells = solve_cell_problems(a, z, MacroGrid{2, 8}, 5);
  const auto u0 = solve_homogenized(homogenized_tensor(a, z, cells), 3);
  const auto cell = forward_map_homogenized(spec, u0, cells);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    INFO("functional " << spec.functionals[i].id);
    CHECK(std::abs(fe[i] - cell[i]) < 0.05 * std::max(std::abs(fe[i]), 1e-3));
  }
}

TEST_CASE("2D unit coefficient: fine FEM and two-scale values coincide") {
  const auto a = TwoScaleCoefficient::uniform(2, constant_mean(2, 1.0), {});
  SeparableTerm w;
  w.dim = 2;
  w.x_factors = {Factor1d::one_plus(), Factor1d::linear()};
  ObservationSpec spec{2, {{"g1", ObservationFunctional::Kind::gradient, 0, w},
                           {"f2", ObservationFunctional::Kind::flux, 1, w}}};
  spec.functionals.push_back(resolve_functionals({"flux2_p1"}, 2)[0]);
  const auto fe = forward_map_homogenized(spec, two_scale(a, ParameterVector{}, 3), a, ParameterVector{});
  EpsilonProblem p{&a, ParameterVector{}, 1.0 / 2};
  p.resolution = 8;
  const auto fem = forward_map_eps(spec, solve_eps_fem(p), a, ParameterVector{}, p.epsilon);
  CHECK(std::abs(fe[0]) > 1e-3);
  CHECK(std::abs(fe[1]) > 1e-3);
  for (std::size_t i = 0; i < spec.size(); ++i) CHECK(std::abs(fem[i] - fe[i]) < 1e-8);
}

TEST_CASE("misfit values") {
  ForwardData d;
  d.delta = {1.0, 2.0};
  d.sigma = 1e-3 * Eigen::MatrixXd::Identity(2, 2);
  const Misfit phi(d);
  const std::vector<double> g{1.0 - 1e-3, 2.0};
  CHECK(phi(g) == doctest::Approx(5e-4).epsilon(1e-12));
  const std::vector<double> g2{1.0 - 2e-3, 2.0};
  CHECK(phi(g2) == doctest::Approx(4 * phi(g)).epsilon(1e-12));

  // Dense covariance route against an explicit inverse.
  d.sigma << 2.0, 0.5, 0.5, 1.0;
  const std::vector<double> g3{0.2, 1.1};
  Eigen::Vector2d r(0.8, 0.9);
  CHECK(Misfit(d)(g3) == doctest::Approx(0.5 * r.dot(d.sigma.inverse() * r)).epsilon(1e-12));

  d.sigma << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(Misfit{d}, NumericalError);
  CHECK_THROWS_AS(Misfit(ForwardData{{1.0}, Eigen::MatrixXd::Identity(1, 1)})(g), DimensionError);
}

TEST_CASE("synthetic noise is reproducible and has the requested covariance") {
  Eigen::MatrixXd sigma(2, 2);
  sigma << 2.0, 0.5, 0.5, 1.0;
  const std::vector<double> g0{0.0, 0.0};
  const auto a = synthesize_data(g0, sigma, 42);
  const auto b = synthesize_data(g0, sigma, 42);
  CHECK(a.delta == b.delta);
  CHECK(synthesize_data(g0, sigma, 43).delta != a.delta);
  CHECK_FALSE(a.diagonal);

  Eigen::Matrix2d c = Eigen::Matrix2d::Zero();
  const int n = 20000;
  for (int s = 0; s < n; ++s) {
    const auto d = synthesize_data(g0, sigma, static_cast<std::uint64_t>(s));
    const Eigen::Vector2d v(d.delta[0], d.delta[1]);
    c += v * v.transpose() / n;
  }
  CHECK(c(0, 0) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(c(1, 1) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(c(0, 1) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("data file round trip") {
  Eigen::MatrixXd sigma(3, 3);
  sigma << 1e-3, 1e-4, 0, 1e-4, 2e-3, 0, 0, 0, 1.0 / 3;
  auto d = synthesize_data({0.1, -2.0 / 3, 1e-17}, sigma, 7, ParameterVector{0.5, -0.45});
  for (bool diagonal : {false, true}) {
    if (diagonal) {
      d.sigma = Eigen::MatrixXd(d.sigma.diagonal().asDiagonal().toDenseMatrix());
      d.diagonal = true;
    }
    const auto back = parse_data_file(format_data_file(d));
    CHECK(back.delta == d.delta);
    CHECK(back.sigma == d.sigma);
    CHECK(back.diagonal == diagonal);
    CHECK(back.noise_seed == d.noise_seed);
    REQUIRE(back.z_ref);
    CHECK(back.z_ref->vector() == d.z_ref->vector());
    CHECK(format_data_file(back) == format_data_file(d));
  }
}

TEST_CASE("malformed data files report the line") {
  auto message = [](const std::string& text) {
    try {
      parse_data_file(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("N 2\ndelta 1 2\nsigma diagonal 1 x\n").find("line 3") != std::string::npos);
  CHECK(message("N 2\n\ndelta 1\n").find("line 3") != std::string::npos);
  CHECK(message("bogus 1\n").find("line 1") != std::string::npos);
  CHECK(message("N 2\ndelta 1 2\nsigma lower\n1\n0.5\n").find("line 5") != std::string::npos);
  CHECK_FALSE(message("N 1\ndelta 1\n").empty());
  CHECK_FALSE(message("N 1\ndelta 1\nsigma diagonal -1\n").empty());
}
