#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "twoscale/catalogue.hpp"
#include "twoscale/two_scale.hpp"

using namespace twoscale;

namespace {

SeparableSum constant_mean(int dim, double c) { return SeparableSum{{SeparableTerm::constant(dim, c)}}; }

TwoScaleCoefficient sample_coefficient(int dim) {
  if (dim == 1) return TwoScaleCoefficient::uniform(1, constant_mean(1, 8.0), resolve_terms({"@u1", "sin2_y"}, 1));
  return TwoScaleCoefficient::uniform(2, constant_mean(2, 6.0), resolve_terms({"u2_s1_c1", "u2_c1_s2q", "lam_y1"}, 2));
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST_CASE("dof counts match the enumerated spaces") {
  for (int d : {1, 2})
    for (int L = 0; L <= (d == 1 ? 6 : 3); ++L) {
      const auto c = count_dofs(d, L);
      CHECK(TwoScaleSpace(d, L, TensorMode::full).size() == c.full());
      CHECK(TwoScaleSpace(d, L, TensorMode::sparse).size() == c.sparse());
    }
  // 1D closed forms: (n-1) + (n+1)(n-1) full, and a sparse u1 block of size O(L 2^L).
  const auto c5 = count_dofs(1, 5);
  CHECK(c5.full() == 63 + 65 * 63);
  CHECK(c5.sparse() < c5.full() / 4);
}

TEST_CASE("oversized spaces are refused with the dof estimate") {
  CHECK_THROWS_WITH_AS(TwoScaleSpace(2, 6, TensorMode::full), doctest::Contains("nodal unknowns"), NumericalError);
}

TEST_CASE("matrix-free operator equals the assembled reference") {
  for (int d : {1, 2})
    for (auto mode : {TensorMode::full, TensorMode::sparse}) {
      const int L = d == 1 ? 3 : 1;
      const TwoScaleSpace space(d, L, mode);
      const auto a = sample_coefficient(d);
      const auto z = sample_prior(PriorKind::uniform, a.size(), 17);
      const auto b = assemble_two_scale_matrix(space, a, z);
      TwoScaleOperator op(space, a, z, Execution::serial);
      const auto v = random_vector(space.size(), 23);
      std::vector<double> out(space.size());
      op.apply(v, out);
      const Eigen::VectorXd ref = b * Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
      const double scale = ref.lpNorm<Eigen::Infinity>();
      for (std::size_t i = 0; i < space.size(); ++i) CHECK(std::abs(out[i] - ref[i]) <= 1e-11 * scale);
    }
}

TEST_CASE("two-scale operator is symmetric positive definite") {
  const TwoScaleSpace space(1, 2, TensorMode::full);
  const auto a = sample_coefficient(1);
  const auto z = sample_prior(PriorKind::uniform, a.size(), 3);
  const Eigen::MatrixXd b = Eigen::MatrixXd(assemble_two_scale_matrix(space, a, z));
  CHECK((b - b.transpose()).norm() <= 1e-12 * b.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("serial and parallel kernels agree") {
  const TwoScaleSpace space(2, 2, TensorMode::full);
  const auto a = sample_coefficient(2);
  const auto z = sample_prior(PriorKind::uniform, a.size(), 4);
  TwoScaleOperator s(space, a, z, Execution::serial), p(space, a, z, Execution::parallel);
  const auto v = random_vector(space.size(), 8);
  std::vector<double> r1(space.size()), r2(space.size());
  s.apply(v, r1);
  p.apply(v, r2);
  for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1[i] == doctest::Approx(r2[i]).epsilon(1e-13));
}

TEST_CASE("preconditioner is the exact diagonal for a unit coefficient") {
  const TwoScaleSpace space(2, 1, TensorMode::full);
  const auto a = TwoScaleCoefficient::uniform(2, constant_mean(2, 1.0), {});
  const auto b = assemble_two_scale_matrix(space, a, ParameterVector{});
  TwoScaleOperator op(space, a, ParameterVector{});
  for (std::size_t i = 0; i < space.size(); ++i)
    CHECK(1.0 / op.inverse_diagonal()[i] == doctest::Approx(b.coeff(i, i)).epsilon(1e-12));
}

TEST_CASE("unit coefficient gives the nodally exact Poisson solution and no corrector") {
  const TwoScaleSpace space(1, 4, TensorMode::full);
  const auto a = TwoScaleCoefficient::uniform(1, constant_mean(1, 1.0), {});
  const auto sol = solve_two_scale(space, a, ParameterVector{});
  const std::size_t n = space.cells();
  for (std::size_t i = 0; i <= n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n);
    CHECK(sol.u0_nodal[i] == doctest::Approx(0.5 * x * (1 - x)).epsilon(1e-9));
  }
  double m = 0.0;
  for (double v : sol.u1_nodal) m = std::max(m, std::abs(v));
  CHECK(m < 1e-9);
}

TEST_CASE("laminate two-scale solution recovers the harmonic-mean homogenized problem") {
  // A depends on y only; u0 solves -A0 u0'' = 1 with A0 the harmonic mean of
  // A over Y, so its nodal values are x(1-x)/(2 A0) up to the y-resolution.
  const auto terms = resolve_terms({"cos_y"}, 1);
  const auto a = TwoScaleCoefficient::uniform(1, constant_mean(1, 2.0), terms);
  const ParameterVector z{0.8};
  const double a0 = std::sqrt(4.0 - 0.64);  // harmonic mean of 2 + 0.8 cos(2 pi y)
  double prev = 1e300;
  for (int L = 3; L <= 6; ++L) {
    const TwoScaleSpace space(1, L, TensorMode::full);
    const auto sol = solve_two_scale(space, a, z);
    const double err = std::abs(sol.u0_at(make_point(0.5)) - 0.125 / a0);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 2e-4 * 0.125 / a0 * 10);
}

TEST_CASE("sparse and full solutions are nested Galerkin projections") {
  const auto a = sample_coefficient(1);
  const auto z = sample_prior(PriorKind::uniform, a.size(), 12);
  const TwoScaleSpace coarse(1, 3, TensorMode::full), fine(1, 4, TensorMode::full), sparse(1, 4, TensorMode::sparse);
  const auto uc = solve_two_scale(coarse, a, z);
  const auto uf = solve_two_scale(fine, a, z);
  const auto us = solve_two_scale(sparse, a, z);
  TwoScaleOperator op(fine, a, z);
  // Galerkin orthogonality: embedding into a larger space loses energy monotonically.
  const double e_coarse = energy_difference(op, uf, coarse, uc);
  const double e_sparse = energy_difference(op, uf, sparse, us);
  CHECK(e_coarse > 0.0);
  CHECK(e_sparse > 0.0);
  CHECK(e_sparse < e_coarse * 1.5);
  // Embedding is exact: the coarse solution is reproduced at coarse nodes.
  const auto emb = embed_coefficients(coarse, uc.coefficients, fine);
  std::vector<double> n0, n1;
  op.coefficients_to_nodal(emb, n0, n1);
  for (std::size_t i = 0; i <= coarse.cells(); ++i) CHECK(n0[2 * i] == doctest::Approx(uc.u0_nodal[i]));
}

TEST_CASE("csv exports") {
  const TwoScaleSpace space(1, 1, TensorMode::full);
  const auto a = sample_coefficient(1);
  const auto sol = solve_two_scale(space, a, ParameterVector{0.1, 0.2, 0.3});
  const auto u0 = u0_csv(sol);
  CHECK(u0.rfind("x,u0\n", 0) == 0);
  const auto u1 = u1_slice_csv(sol, make_point(0.5));
  CHECK(u1.rfind("y,u1\n", 0) == 0);
  CHECK(std::count(u1.begin(), u1.end(), '\n') == 1 + static_cast<long>(space.cells()));
}
