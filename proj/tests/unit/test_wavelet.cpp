#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "twoscale/wavelet.hpp"

using namespace twoscale;

namespace {

const WaveletKind kAll[] = {WaveletKind::interval_l2, WaveletKind::interval_h10, WaveletKind::periodic};

// Nodal values handled by the transform for a direct evaluation on the
// finest mesh (n + 1 nodes).
std::vector<double> restrict_nodes(WaveletKind kind, const std::vector<double>& v) {
  switch (kind) {
    case WaveletKind::interval_l2: return v;
    case WaveletKind::interval_h10: return {v.begin() + 1, v.end() - 1};
    case WaveletKind::periodic: return {v.begin(), v.end() - 1};
  }
  return {};
}

Eigen::MatrixXd direct_matrix(const WaveletBasis1d& b) {
  Eigen::MatrixXd t(b.size(), b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto v = restrict_nodes(b.kind(), b.fine_nodal_values(i));
    for (std::size_t k = 0; k < v.size(); ++k) t(k, i) = v[k];
  }
  return t;
}

}  // namespace

TEST_CASE("basis sizes match the nodal spaces") {
  for (int L = 0; L <= 6; ++L) {
    const std::size_t n = cells_at_level(L);
    CHECK(WaveletBasis1d(WaveletKind::interval_l2, L).size() == n + 1);
    CHECK(WaveletBasis1d(WaveletKind::interval_h10, L).size() == n - 1);
    CHECK(WaveletBasis1d(WaveletKind::periodic, L).size() == n);
  }
}

TEST_CASE("each basis spans its nodal space") {
  for (auto kind : kAll)
    for (int L = 0; L <= 5; ++L) {
      const WaveletBasis1d b(kind, L);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(direct_matrix(b));
      CHECK(lu.rank() == static_cast<Eigen::Index>(b.size()));
    }
}

TEST_CASE("fast transform agrees with direct evaluation and its transpose is exact") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (auto kind : kAll)
    for (int L = 0; L <= 5; ++L) {
      const WaveletBasis1d b(kind, L);
      const Eigen::MatrixXd t = direct_matrix(b);
      std::vector<double> c(b.size()), v(b.size()), out(b.size());
      for (auto& x : c) x = g(rng);
      b.to_nodal(c, out);
      const Eigen::VectorXd ref = t * Eigen::Map<Eigen::VectorXd>(c.data(), c.size());
      for (std::size_t k = 0; k < b.size(); ++k) CHECK(out[k] == doctest::Approx(ref[k]).epsilon(1e-12));
      for (auto& x : v) x = g(rng);
      b.to_nodal_transpose(v, out);
      const Eigen::VectorXd reft = t.transpose() * Eigen::Map<Eigen::VectorXd>(v.data(), v.size());
      for (std::size_t k = 0; k < b.size(); ++k) CHECK(out[k] == doctest::Approx(reft[k]).epsilon(1e-12));
    }
}

TEST_CASE("function indices do not depend on the finest level") {
  for (auto kind : kAll) {
    const WaveletBasis1d coarse(kind, 3), fine(kind, 5);
    for (std::size_t i = 0; i < coarse.size(); ++i)
      for (double t : {0.0, 0.1, 0.37, 0.5, 0.81, 1.0}) CHECK(coarse.eval(i, t) == doctest::Approx(fine.eval(i, t)));
  }
}

TEST_CASE("periodic wavelets vanish at the origin and match across the period") {
  const WaveletBasis1d b(WaveletKind::periodic, 4);
  for (std::size_t i = 1; i < b.size(); ++i) {
    CHECK(b.eval(i, 0.0) == 0.0);
    CHECK(b.eval(i, 1.0) == 0.0);
    CHECK(b.eval(i, 0.3) == doctest::Approx(b.eval(i, 1.3)));
  }
  CHECK(b.eval(0, 0.42) == 1.0);
}

TEST_CASE("mass and stiffness agree with fine-mesh integration") {
  for (auto kind : kAll) {
    const WaveletBasis1d b(kind, 4);
    const std::size_t n = cells_at_level(4);
    const double h = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto v = b.fine_nodal_values(i);
      double m = 0.0, s = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        m += h / 3.0 * (v[c] * v[c] + v[c] * v[c + 1] + v[c + 1] * v[c + 1]);
        s += (v[c + 1] - v[c]) * (v[c + 1] - v[c]) / h;
      }
      CHECK(b.mass(i) == doctest::Approx(m).epsilon(1e-13));
      CHECK(b.stiffness(i) == doctest::Approx(s).epsilon(1e-13));
    }
  }
}

TEST_CASE("normalized bases have level-independent diagonal scaling") {
  // L2 wavelets: mass bounded above and below uniformly in the level; H1
  // wavelets: same for stiffness.
  const WaveletBasis1d l2(WaveletKind::interval_l2, 8), h1(WaveletKind::interval_h10, 8);
  double lo = 1e300, hi = 0.0;
  for (std::size_t i = 0; i < l2.size(); ++i) lo = std::min(lo, l2.mass(i)), hi = std::max(hi, l2.mass(i));
  CHECK(hi / lo < 16.0);
  lo = 1e300, hi = 0.0;
  for (std::size_t i = 0; i < h1.size(); ++i)
    lo = std::min(lo, h1.stiffness(i)), hi = std::max(hi, h1.stiffness(i));
  CHECK(hi / lo < 16.0);
}

TEST_CASE("axis transform equals the 1D transform on every line") {
  const WaveletBasis1d bx(WaveletKind::interval_l2, 2), by(WaveletKind::periodic, 3);
  const std::size_t shape[2] = {bx.size(), by.size()};
  std::vector<double> data(shape[0] * shape[1]);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& x : data) x = u(rng);
  for (bool par : {false, true}) {
    auto a = data;
    transform_axis(by, a, shape, 1, false, par);
    for (std::size_t r = 0; r < shape[0]; ++r) {
      std::vector<double> line(data.begin() + r * shape[1], data.begin() + (r + 1) * shape[1]), out(shape[1]);
      by.to_nodal(line, out);
      for (std::size_t k = 0; k < shape[1]; ++k) CHECK(a[r * shape[1] + k] == out[k]);
    }
    auto b = data;
    transform_axis(bx, b, shape, 0, true, par);
    for (std::size_t c = 0; c < shape[1]; ++c) {
      std::vector<double> line(shape[0]), out(shape[0]);
      for (std::size_t r = 0; r < shape[0]; ++r) line[r] = data[r * shape[1] + c];
      bx.to_nodal_transpose(line, out);
      for (std::size_t r = 0; r < shape[0]; ++r) CHECK(b[r * shape[1] + c] == out[r]);
    }
  }
}
