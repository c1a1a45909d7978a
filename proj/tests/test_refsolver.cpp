#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "jacobi.hpp"
#include "spectra/errors.hpp"
#include "spectra/refsolver.hpp"

using namespace spectra;

namespace {

const BoxGeometry kBox({M_PI, M_PI});

Matrix mat2(double a, double b, double c) {
  Matrix w(2, 2);
  w << a, b, b, c;
  return w;
}

MatrixFourierPotential sample_potential() {
  auto v = make_zero_potential(kBox, 2, 17);
  v.coefficients[{0, 0}] = mat2(0.5, 0.1, -0.2);
  v.coefficients[{1, 0}] = mat2(0.3, -0.4, 0.2);
  v.coefficients[{0, 2}] = mat2(-0.1, 0.05, 0.7);
  v.coefficients[{1, 1}] = mat2(0.25, 0.15, -0.35);
  return v;
}

// band-limited potential depending on x_1 only
MatrixFourierPotential separable_potential() {
  auto v = make_zero_potential(kBox, 2, 17);
  v.coefficients[{0, 0}] = mat2(0.2, 0.3, -0.1);
  v.coefficients[{1, 0}] = mat2(0.6, -0.25, 0.4);
  v.coefficients[{2, 0}] = mat2(-0.3, 0.1, 0.2);
  return v;
}

template <class F>
double box_mean(F f, int n = 256) {
  double s = 0;
  for (int a = 0; a <= n; ++a)
    for (int b = 0; b <= n; ++b) {
      double w = (a == 0 || a == n ? 0.5 : 1.0) * (b == 0 || b == n ? 0.5 : 1.0);
      s += w * f(M_PI * a / n, M_PI * b / n);
    }
  return s / (double(n) * n);
}

}  // namespace

TEST_CASE("free operator") {
  auto v = make_zero_potential(kBox, 2, 17);
  auto full = eigen_full(v, 10.0);
  CHECK(full.basis.size() == 2 * int(build_orbits(kBox, 10).size()));
  std::vector<double> expect;
  for (const auto& g : full.basis.orbits())
    for (int i = 0; i < 2; ++i) expect.push_back(kBox.norm2(g));
  std::sort(expect.begin(), expect.end());
  for (int k = 0; k < full.values.size(); ++k) CHECK(full.values(k) == doctest::Approx(expect[k]));
  CHECK(full.residuals.maxCoeff() <= 1e-10);
}

TEST_CASE("basis cap") {
  CHECK_THROWS_AS(OracleBasis(kBox, 100.0, 2, 4000), Error);
  try {
    OracleBasis(kBox, 100.0, 2, 4000);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Resource);
  }
  OracleBasis b(kBox, 5.0, 2);
  CHECK(b.find({0, 0}) == 0);
  CHECK(b.find({5, 0}) == -1);
  CHECK(b.find({-1, 0}) == -1);
  CHECK_THROWS_AS(OracleBasis(kBox, std::vector<LatticeVector>{{0, 1}, {0, 1}}, 1, 2.0), Error);
}

TEST_CASE("L entries against quadrature") {
  auto v = sample_potential();
  OracleBasis basis(kBox, 3.0, 2);
  Matrix l = Matrix(assemble_L(v, basis));
  CHECK(exactly_symmetric(l));
  const auto& orbits = basis.orbits();
  for (std::size_t a = 0; a < orbits.size(); ++a)
    for (std::size_t b = 0; b < orbits.size(); ++b)
      for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k) {
          const auto& g = orbits[a];
          const auto& h = orbits[b];
          double norm = std::sqrt(double(orbit_size(g)) * orbit_size(h));
          double q = norm * box_mean([&](double s0, double s1) {
                       return evaluate(v, {s0, s1})(i, k) * std::cos(g[0] * s0) * std::cos(g[1] * s1) *
                              std::cos(h[0] * s0) * std::cos(h[1] * s1);
                     });
          if (a == b && i == k) q += kBox.norm2(g);
          CHECK(l(a * 2 + i, b * 2 + k) == doctest::Approx(q).epsilon(1e-12).scale(1));
        }
}

TEST_CASE("permutation of the basis leaves the spectrum unchanged") {
  auto v = sample_potential();
  OracleBasis natural(kBox, 6.0, 2);
  auto orbits = natural.orbits();
  std::reverse(orbits.begin(), orbits.end());
  std::rotate(orbits.begin(), orbits.begin() + 5, orbits.end());
  OracleBasis shuffled(kBox, orbits, 2, 6.0);
  auto a = eigen_full(v, natural);
  auto b = eigen_full(v, shuffled);
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("agreement with the Jacobi oracle") {
  auto v = sample_potential();
  OracleBasis basis(kBox, 5.0, 2);
  auto full = eigen_full(v, basis);
  auto j = testing_oracle::jacobi_eigen(Matrix(assemble_L(v, basis)));
  CHECK((full.values - j.values).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("separable potential: spectrum and overlaps") {
  auto v = separable_potential();
  const double cutoff = 16;
  auto full = eigen_full(v, cutoff);
  auto set = solve_directional(directional_part(v, 0), 64);
  std::vector<double> expect;
  for (int b = 0; b < cutoff; ++b)
    for (const auto& e : set.pairs) expect.push_back(e.lambda + b * b);
  std::sort(expect.begin(), expect.end());
  const double half = 0.5 * cutoff * cutoff;
  int checked = 0;
  for (int k = 0; k < full.values.size() && full.values(k) < half - 10; ++k, ++checked)
    CHECK(full.values(k) == doctest::Approx(expect[k]).epsilon(1e-8));
  CHECK(checked > 100);

  auto ops = binding_operators(v, 0, full.basis);
  CHECK(ops.coupling.nonZeros() == 0);
  for (int j : {0, 3, 5})
    for (int b : {0, 2, 7}) {
      auto o = overlaps(full, ops, set, j, 1, {0, b});
      CHECK(o.chi_norm2 == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(o.parseval == doctest::Approx(1.0).epsilon(1e-12));
      int ones = 0;
      for (const auto& r : o.records) {
        double c = std::abs(r.c);
        CHECK((c < 1e-8 || std::abs(c - 1) < 1e-8));
        if (c > 0.5) {
          ++ones;
          CHECK(std::abs(r.gap) < 1e-8);
        }
        CHECK(r.binding_residual() <= 1e-9 + r.tail);
      }
      CHECK(ones == 1);
      auto mt = match(o, 1.0, 0.5);
      CHECK(std::abs(mt.c) == doctest::Approx(1.0));
    }
}

TEST_CASE("zero potential: overlaps against hand-built operators") {
  auto v = make_zero_potential(kBox, 1, 17);
  OracleBasis basis(kBox, 8.0, 1);
  auto full = eigen_full(v, basis);
  DirectionalPotential p;
  p.m = 1;
  auto set = solve_directional(p, 16);
  BindingOperators ops;
  ops.axis = 0;
  ops.separable = assemble_L(v, basis);
  ops.coupling = SparseMatrix(basis.size(), basis.size());
  auto o = overlaps(full, ops, set, 2, 0, {0, 3});
  CHECK(o.lambda == doctest::Approx(13));
  CHECK(o.tail == doctest::Approx(0).scale(1));
  for (const auto& r : o.records) {
    double c = std::abs(r.c);
    CHECK((c == doctest::Approx(0).scale(1) || c == doctest::Approx(1)));
  }
  CHECK_THROWS_AS(overlaps(full, ops, set, 2, 0, {1, 3}), Error);
}

TEST_CASE("binding identity and matching at rho = 20") {
  auto v = generate_random_potential(GeneratorSpec{}, kBox);
  auto full = eigen_full(v, 30.0);
  auto ops = binding_operators(v, 0, full.basis);
  auto set = solve_directional(directional_part(v, 0), 64);
  double M = 0;
  for (const auto& [g, w] : v.coefficients) M += w.operatorNorm();
  const double c_floor = std::pow(20, -27 * 0.04);
  for (int slot : {0, 1}) {
    auto o = overlaps(full, ops, set, 0, slot, {0, 15});
    CHECK(o.parseval == doctest::Approx(1.0).epsilon(1e-6));
    for (const auto& r : o.records) CHECK(r.binding_residual() <= 1e-6 + r.tail);
    auto mt = match(o, M, c_floor);
    CHECK(std::abs(mt.gap) < 2 * M);
    CHECK(std::abs(mt.c) > c_floor);
    CHECK(mt.N >= 0);

    try {
      match(o, M, 2.0);
      FAIL("expected NoMatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NoMatch);
    }
  }
}

TEST_CASE("contract checks") {
  auto v = sample_potential();
  OracleBasis basis(kBox, 4.0, 1);
  CHECK_THROWS_AS(potential_matrix(v, basis), Error);
}
