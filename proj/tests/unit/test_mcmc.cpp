#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "twoscale/catalogue.hpp"
#include "twoscale/mcmc.hpp"
#include "twoscale/quadrature.hpp"

using namespace twoscale;

namespace {

ForwardData scalar_data(double delta, double sigma2) {
  ForwardData d;
  d.delta = {delta};
  d.sigma = Eigen::MatrixXd::Constant(1, 1, sigma2);
  return d;
}

std::shared_ptr<const ForwardModel> shifted_identity(double shift) {
  return std::make_shared<FunctionForward>(1, 1, [shift](const ParameterVector& z) {
    return std::vector<double>{z[0] + shift};
  });
}

std::shared_ptr<const ForwardModel> constant_map(std::size_t j, double value) {
  return std::make_shared<FunctionForward>(j, 1, [value](const ParameterVector&) { return std::vector<double>{value}; });
}

// int_{-1}^{1} g(z) dz / 2 with 400 Gauss panels.
template <class F>
double prior_integral(F g) {
  const Rule1d r = composite_gauss(-1.0, 1.0, 400, 5);
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * g(r.nodes[i]);
  return 0.5 * s;
}

}  // namespace

TEST_CASE("flat likelihood accepts every proposal and samples the prior") {
  const PosteriorModel m(PriorKind::uniform, constant_map(2, 0.3), scalar_data(0.0, 1.0));
  const auto chain = run_independence_sampler(m, {20000, 5, 0.0});
  CHECK(chain.acceptance_rate == 1.0);
  const auto mean = chain.mean();
  const auto sd = chain.stddev();
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(mean[i]) < 4 * std::sqrt(1.0 / 3 / 20000));
    CHECK(sd[i] == doctest::Approx(std::sqrt(1.0 / 3)).epsilon(0.02));
  }
}

TEST_CASE("toy posterior histogram matches the analytic density") {
  const double sigma = 0.5;
  const PosteriorModel m(PriorKind::uniform, shifted_identity(0.0), scalar_data(0.0, sigma * sigma));
  const auto chain = run_independence_sampler(m, {100000, 11, 0.1});
  std::vector<double> z;
  for (std::size_t k = chain.burn_in; k < chain.size(); ++k) z.push_back(chain.samples[k][0]);
  std::sort(z.begin(), z.end());
  const double norm = std::erf(1.0 / (sigma * std::sqrt(2.0)));
  auto cdf = [&](double t) { return 0.5 * (1.0 + std::erf(t / (sigma * std::sqrt(2.0))) / norm); };
  double ks = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = cdf(z[i]);
    ks = std::max({ks, std::abs(f - double(i) / z.size()), std::abs(f - double(i + 1) / z.size())});
  }
  CHECK(ks < 0.02);
}

TEST_CASE("independence kernel satisfies detailed balance on a three-point target") {
  const double phi[3] = {0.2, 1.5, 0.7};
  const double q = 1.0 / 3;
  double pi[3], z = 0.0;
  for (int i = 0; i < 3; ++i) z += pi[i] = std::exp(-phi[i]);
  for (double& p : pi) p /= z;
  double p[3][3] = {};
  for (int i = 0; i < 3; ++i) {
    double stay = 1.0;
    for (int j = 0; j < 3; ++j)
      if (j != i) stay -= p[i][j] = q * acceptance_probability(phi[i], phi[j]);
    p[i][i] = stay;
  }
  for (int j = 0; j < 3; ++j) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
      s += pi[i] * p[i][j];
      CHECK(pi[i] * p[i][j] == doctest::Approx(pi[j] * p[j][i]).epsilon(1e-14));
    }
    CHECK(s == doctest::Approx(pi[j]).epsilon(1e-14));
  }
}

TEST_CASE("chains are reproducible and invariant under a constant potential shift") {
  const auto fwd = std::make_shared<FunctionForward>(2, 2, [](const ParameterVector& z) {
    return std::vector<double>{z[0] * z[0] + z[1] * z[1], 0.0};
  });
  ForwardData d;
  d.delta = {0.3, 0.0};
  d.sigma = 0.01 * Eigen::MatrixXd::Identity(2, 2);
  ForwardData shifted = d;
  shifted.delta[1] = 0.25;  // adds the constant 0.25^2 / 0.02 to Phi
  const PosteriorModel a(PriorKind::uniform, fwd, d), b(PriorKind::uniform, fwd, shifted);
  const auto c1 = run_independence_sampler(a, {3000, 99, 0.1, 100});
  const auto c2 = run_independence_sampler(a, {3000, 99, 0.1, 7});
  const auto c3 = run_independence_sampler(b, {3000, 99, 0.1, 100});
  CHECK(chain_csv(c1) == chain_csv(c2));
  CHECK(c1.samples == c3.samples);
  CHECK(c1.accepted == c3.accepted);
  CHECK(c1.acceptance_rate > 0.0);
  CHECK(c1.acceptance_rate < 1.0);
  // Stored potentials match recomputation.
  for (std::size_t k = 0; k < c1.size(); k += 97) CHECK(c1.potentials[k] == a.potential(c1.samples[k]));
}

TEST_CASE("forward failures name the offending parameter") {
  const auto fwd = std::make_shared<FunctionForward>(1, 1, [](const ParameterVector& z) -> std::vector<double> {
    if (z[0] > 0.5) throw SolverError("no convergence", 10, 0.5);
    return {z[0]};
  });
  const PosteriorModel m(PriorKind::uniform, fwd, scalar_data(0.0, 1.0));
  try {
    run_independence_sampler(m, {200, 3, 0.1});
    FAIL("expected a failure");
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("z = (") != std::string::npos);
    CHECK(msg.find("no convergence") != std::string::npos);
  }
}

TEST_CASE("normalizer estimates") {
  const std::vector<double> zero(100, 0.0), c(100, 2.5);
  CHECK(normalizer_from_potentials(zero).value == 1.0);
  CHECK(normalizer_from_potentials(zero).std_error == 0.0);
  CHECK(normalizer_from_potentials(c).value == doctest::Approx(std::exp(-2.5)).epsilon(1e-14));
  // Underflow-safe: Phi = 2000 would vanish in linear scale.
  const std::vector<double> big(10, 2000.0);
  CHECK(normalizer_from_potentials(big).log_value == doctest::Approx(-2000.0));

  const double sigma = 0.3;
  const PosteriorModel m(PriorKind::uniform, shifted_identity(0.0), scalar_data(0.1, sigma * sigma));
  const auto z = estimate_normalizer(m, 20000, 4);
  const double exact = prior_integral([&](double t) { return std::exp(-(t - 0.1) * (t - 0.1) / (2 * sigma * sigma)); });
  CHECK(std::abs(z.value - exact) < 3 * z.std_error);
  CHECK(z.value >= std::exp(-z.max_potential));
}

TEST_CASE("hellinger estimator properties") {
  const double sigma = 0.3;
  const PosteriorModel a(PriorKind::uniform, shifted_identity(0.0), scalar_data(0.0, sigma * sigma));
  const PosteriorModel b(PriorKind::uniform, shifted_identity(0.1), scalar_data(0.0, sigma * sigma));
  CHECK(hellinger_estimate(a, a, 1000, 1).distance == 0.0);

  const auto draws = prior_draws(PriorKind::uniform, 1, 5000, 8);
  const auto pa = a.potentials(draws), pb = b.potentials(draws);
  CHECK(hellinger_distance(pa, pb) == hellinger_distance(pb, pa));
  std::vector<double> shifted = pa;
  for (double& v : shifted) v += 3.0;
  CHECK(hellinger_distance(pa, shifted) < 1e-12);

  auto fa = [&](double t) { return std::exp(-t * t / (2 * sigma * sigma)); };
  auto fb = [&](double t) { return std::exp(-(t + 0.1) * (t + 0.1) / (2 * sigma * sigma)); };
  const double za = prior_integral(fa), zb = prior_integral(fb);
  const double d2 = 0.5 * prior_integral([&](double t) {
    const double diff = std::sqrt(fa(t) / za) - std::sqrt(fb(t) / zb);
    return diff * diff;
  });
  const auto h = hellinger_estimate(a, b, 20000, 21, 300);
  CHECK(std::abs(h.distance - std::sqrt(d2)) < 3 * h.bootstrap_std);
  CHECK(h.ci_low <= h.distance);
  CHECK(h.ci_high >= h.distance);
  CHECK(h.distance <= 1.0);
}

TEST_CASE("hellinger study on identical models reports zero and refuses a slope") {
  const PosteriorModel a(PriorKind::uniform, shifted_identity(0.0), scalar_data(0.0, 0.1));
  const std::vector<std::pair<double, const PosteriorModel*>> ladder{{0.125, &a}, {0.0625, &a}, {0.03125, &a}};
  const auto s = hellinger_rate_study(a, ladder, LadderKind::epsilon, 500, 3, 20);
  for (const auto& r : s.rungs) CHECK(r.estimate.distance == 0.0);
  CHECK_FALSE(s.fit);
  CHECK_FALSE(s.note.empty());
  CHECK(hellinger_study_csv(s, LadderKind::epsilon).rfind("epsilon,hellinger,bootstrap_std,ci_low,ci_high\n", 0) == 0);
}

TEST_CASE("hellinger study recovers a planted rate") {
  // Shifting the data by t changes the posterior by O(t).
  std::vector<std::unique_ptr<PosteriorModel>> models;
  std::vector<std::pair<double, const PosteriorModel*>> ladder;
  const PosteriorModel ref(PriorKind::uniform, shifted_identity(0.0), scalar_data(0.0, 0.09));
  for (double eps : {0.2, 0.1, 0.05, 0.025}) {
    models.push_back(std::make_unique<PosteriorModel>(PriorKind::uniform, shifted_identity(eps), scalar_data(0.0, 0.09)));
    ladder.emplace_back(eps, models.back().get());
  }
  const auto s = hellinger_rate_study(ref, ladder, LadderKind::epsilon, 20000, 5, 100);
  CHECK(s.monotone);
  REQUIRE(s.fit);
  CHECK(s.fit->slope == doctest::Approx(1.0).epsilon(0.1));
  CHECK(s.slope_bootstrap_std > 0.0);
}

TEST_CASE("posterior field moments") {
  const auto coeff = TwoScaleCoefficient::uniform(1, SeparableSum{{SeparableTerm::constant(1, 9.0)}},
                                                  resolve_terms({"@u1"}, 1));
  const std::vector<Point> xs{make_point(0.1), make_point(0.6)}, ys{make_point(0.2), make_point(0.75)};
  PosteriorChain one;
  one.samples = {ParameterVector{0.3, -0.2}};
  one.potentials = {0.0};
  one.accepted = {1};
  const auto f1 = posterior_field_moments(one, coeff, xs, ys);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(f1.mean[i * 2 + j] == doctest::Approx(coeff.eval(one.samples[0], xs[i], ys[j])));
      CHECK(f1.variance[i * 2 + j] == doctest::Approx(0.0).scale(1e-12));
    }

  PosteriorChain same = one;
  same.samples.assign(50, one.samples[0]);
  same.potentials.assign(50, 0.0);
  same.accepted.assign(50, 1);
  for (double v : posterior_field_moments(same, coeff, xs, ys).variance) CHECK(v < 1e-12);

  const PosteriorModel flat(PriorKind::uniform, constant_map(2, 0.0), scalar_data(0.0, 1.0));
  const auto chain = run_independence_sampler(flat, {20000, 17, 0.1});
  for (double v : posterior_field_moments(chain, coeff, xs, ys).mean) CHECK(v == doctest::Approx(9.0).epsilon(0.01));
}

TEST_CASE("log-gaussian exponential moment is stable across seeds") {
  const auto coeff = TwoScaleCoefficient::log_gaussian(2, SeparableSum{{SeparableTerm::constant(2, 0.5)}},
                                                       SeparableSum{{SeparableTerm::constant(2, 0.0)}},
                                                       resolve_terms({"@lg2"}, 2));
  std::vector<double> m;
  for (std::uint64_t s : {1, 2, 3, 4}) m.push_back(integrability_moment(coeff, PriorKind::gaussian, 1.0, 10000, s));
  const auto [lo, hi] = std::minmax_element(m.begin(), m.end());
  CHECK(std::isfinite(*hi));
  CHECK((*hi - *lo) / *lo < 0.2);
}

TEST_CASE("chain csv formats") {
  PosteriorChain c;
  c.samples = {ParameterVector{0.5, -0.25}, ParameterVector{0.125, 1.0}};
  c.potentials = {1.5, 0.25};
  c.accepted = {1, 0};
  CHECK(chain_csv(c) == "step,z_1,z_2,potential,accepted\n0,0.5,-0.25,1.5,1\n1,0.125,1,0.25,0\n");
  CHECK(scatter_csv(c) == "z_1,z_2\n0.5,-0.25\n0.125,1\n");
  CHECK(chain_summary(c).find("acceptance_rate = 0") != std::string::npos);
}
