#include <doctest.h>

#include <algorithm>
#include <map>
#include <sstream>

#include "spectra/errors.hpp"
#include "spectra/harness.hpp"
#include "spectra/lattice.hpp"

using namespace spectra;

namespace {
const BoxGeometry kBox({M_PI, M_PI});

std::map<DomainTag, int> tag_counts(double rho) {
  auto params = AsymptoticParams::make(rho, 0.04, 2, 17);
  std::map<DomainTag, int> n;
  for (const auto& p : classify_shell(kBox, params, Shell{})) ++n[p.cls.tag];
  return n;
}
}  // namespace

TEST_CASE("geometry") {
  BoxGeometry g({1.0, 2.0});
  CHECK(g.volume() == doctest::Approx(2.0));
  CHECK(g.step2(0) == doctest::Approx(M_PI * M_PI));
  CHECK(g.norm2({1, 2}) == doctest::Approx(2 * M_PI * M_PI));
  CHECK_THROWS_AS(BoxGeometry({1.0}), Error);
  CHECK_THROWS_AS(BoxGeometry({1.0, 0.0}), Error);
  CHECK_THROWS_AS(BoxGeometry({1.0, INFINITY}), Error);
}

TEST_CASE("lattice enumeration") {
  CHECK(build_lattice(kBox, 2).size() == 9);
  CHECK(build_lattice(kBox, 0).size() == 0);
  CHECK(build_lattice(kBox, 3).size() == 25);  // norms^2 0,1,2,4,5,8
  // strict inequality: |(2,0)| = 2 is excluded
  auto pts = build_lattice(kBox, 2);
  CHECK(std::find(pts.begin(), pts.end(), LatticeVector{2, 0}) == pts.end());
  CHECK(std::is_sorted(pts.begin(), pts.end()));
  auto orbits = build_orbits(kBox, 3);
  int total = 0;
  for (const auto& o : orbits) {
    CHECK(std::all_of(o.begin(), o.end(), [](int c) { return c >= 0; }));
    total += orbit_size(o);
  }
  CHECK(total == 25);
  CHECK_THROWS_AS(build_lattice(kBox, -1), Error);
}

TEST_CASE("orbits") {
  CHECK(orbit_size({0, 0}) == 1);
  CHECK(orbit_size({3, 0}) == 2);
  CHECK(orbit_size({-1, 2}) == 4);
  CHECK(orbit_representative({-1, 2}) == LatticeVector{1, 2});
  CHECK(orbit({1, 0}).size() == 2);
}

TEST_CASE("decomposition") {
  Decomposition d = decompose({3, -7}, 0);
  CHECK(d.j == 3);
  CHECK(d.beta == LatticeVector{0, -7});
  d = decompose({3, -7}, 1);
  CHECK(d.j == -7);
  CHECK(d.beta == LatticeVector{3, 0});
  for (int axis : {0, 1})
    for (const auto& g : build_lattice(kBox, 5)) {
      Decomposition e = decompose(g, axis);
      CHECK(recompose(e.j, e.beta, axis) == g);
    }
}

TEST_CASE("parameters") {
  auto p = AsymptoticParams::make(20, 0.04, 2, 17);
  CHECK(p.p == 15);
  CHECK(p.q == 27);
  CHECK(p.p2 == 3);
  CHECK(p.a(1) == doctest::Approx(0.12));
  CHECK(p.a(2) == doctest::Approx(0.36));
  CHECK(p.r(2, 1.0) == doctest::Approx(7 * p.r1(1.0)));
  // alpha must be below 1/(d+20) = 1/22
  CHECK_THROWS_AS(AsymptoticParams::make(20, 0.05, 2, 17), Error);
  // l must exceed (d+20)(d-1)/2 + d + 3 = 16
  CHECK_THROWS_AS(AsymptoticParams::make(20, 0.04, 2, 16), Error);
  CHECK_THROWS_AS(AsymptoticParams::make(0, 0.04, 2, 17), Error);
  CHECK_THROWS_AS(AsymptoticParams::make(20, 0.04, 1, 17), Error);
  try {
    AsymptoticParams::make(20, 0.05, 2, 17);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parameter);
  }
}

TEST_CASE("integer rank") {
  CHECK(integer_rank({}) == 0);
  CHECK(integer_rank({{0, 0}}) == 0);
  CHECK(integer_rank({{1, 2}, {2, 4}, {-3, -6}}) == 1);
  CHECK(integer_rank({{1, 0}, {1, 1}}) == 2);
  CHECK(integer_rank({{2, 3, 0}, {4, 6, 0}, {0, 0, 5}}) == 2);
}

TEST_CASE("classification examples") {
  auto p40 = AsymptoticParams::make(40, 0.04, 2, 17);
  auto p20 = AsymptoticParams::make(20, 0.04, 2, 17);

  DomainClass a = classify({0, 40}, p40, kBox);
  CHECK(a.witnesses.size() == 2);
  // b = (+-9, -1) is primitive with |2 gamma.b + |b|^2| = 2 < rho^alpha_2: rank 2
  CHECK(a.tag == DomainTag::HigherResonance);
  CHECK(in_E(kBox.frequency({0, 40}), 2, WitnessTable(kBox, p40)));

  // Diagonal point: no witness within rho^alpha_1 (brute force agrees).
  DomainClass b = classify({28, 28}, p40, kBox);
  CHECK(b.witnesses.empty());
  CHECK(b.tag == DomainTag::NonResonance);

  // Brute-force witness counts, tests/oracles/derive_constants.py
  CHECK(classify({0, 15}, p20, kBox).witnesses.size() == 6);
  CHECK(classify({1, 14}, p20, kBox).witnesses.size() == 2);
  CHECK(classify({7, 9}, p20, kBox).witnesses.size() == 8);
  CHECK(classify({3, 17}, p20, kBox).witnesses.size() == 1);
  CHECK(classify({10, 10}, p20, kBox).witnesses.size() == 4);

  DomainClass c = classify({0, 15}, p20, kBox);
  CHECK(c.tag == DomainTag::SingleResonance);
  CHECK(c.axis == 0);
  CHECK(std::abs(c.j) <= 1);
  CHECK(c.beta == LatticeVector{0, 15});

  CHECK_THROWS_AS(classify({1, 1}, p20, kBox), Error);
  CHECK_THROWS_AS(classify({1, 1, 1}, p20, kBox), Error);
}

TEST_CASE("shell tag counts match brute force") {
  // derive_constants.py, independent scan
  auto c10 = tag_counts(10);
  CHECK(c10[DomainTag::HigherResonance] == 856);
  CHECK(c10[DomainTag::NonResonance] == 8);
  CHECK(c10[DomainTag::OtherResonance] == 276);
  CHECK(c10[DomainTag::SingleResonance] == 24);
  auto c20 = tag_counts(20);
  CHECK(c20[DomainTag::HigherResonance] == 2288);
  CHECK(c20[DomainTag::NonResonance] == 320);
  CHECK(c20[DomainTag::OtherResonance] == 1960);
  CHECK(c20[DomainTag::SingleResonance] == 128);
  auto c40 = tag_counts(40);
  CHECK(c40[DomainTag::HigherResonance] == 6816);
  CHECK(c40[DomainTag::NonResonance] == 4456);
  CHECK(c40[DomainTag::OtherResonance] == 7208);
  CHECK(c40[DomainTag::SingleResonance] == 332);
}

TEST_CASE("classification invariants") {
  auto params = AsymptoticParams::make(20, 0.04, 2, 17);
  WitnessTable table(kBox, params);
  const double level1 = params.rho_pow(params.a(1));
  for (const auto& pt : classify_shell(kBox, params, Shell{})) {
    const auto& c = pt.cls;
    const auto x = kBox.frequency(pt.gamma);
    // every witness satisfies the resonance inequality
    for (const auto& b : c.witnesses) {
      double defect = std::abs(kBox.norm2(pt.gamma) - kBox.norm2({pt.gamma[0] + b[0], pt.gamma[1] + b[1]}));
      REQUIRE(defect < level1);
      REQUIRE(kBox.norm(b) < params.witness_radius());
    }
    CHECK((c.tag == DomainTag::NonResonance) == c.witnesses.empty());
    if (!c.witnesses.empty()) CHECK((c.tag == DomainTag::HigherResonance) == in_E(x, 2, table));
    if (c.tag == DomainTag::SingleResonance) {
      CHECK(std::abs(c.j) < params.r1(kBox.step2(c.axis)));
      CHECK(recompose(c.sign * c.j, c.beta, c.axis) == pt.gamma);
    }
    // sign symmetry: flipping any coordinate keeps the tag
    for (int k = 0; k < 2; ++k) {
      LatticeVector f = pt.gamma;
      f[k] = -f[k];
      DomainClass cf = classify(f, table);
      CHECK(cf.tag == c.tag);
      CHECK(cf.witnesses.size() == c.witnesses.size());
    }
  }
}

TEST_CASE("single-resonance points are the nonnegative shell points") {
  auto params = AsymptoticParams::make(20, 0.04, 2, 17);
  auto pts = single_resonance_points(kBox, params, Shell{});
  int total = 0;
  for (const auto& p : pts) total += orbit_size(p.gamma);
  CHECK(total == 128);
  for (const auto& p : pts) {
    CHECK(p.gamma[0] >= 0);
    CHECK(p.gamma[1] >= 0);
    CHECK(p.cls.tag == DomainTag::SingleResonance);
  }
  auto near = single_resonance_points(kBox, params, Shell{}, 16);
  for (const auto& p : near) CHECK(kBox.norm(p.gamma) < 16);
}

TEST_CASE("measure estimate") {
  auto p10 = AsymptoticParams::make(10, 0.04, 2, 17);
  auto a = estimate_measure_ratio(kBox, 0, p10, Shell{}, 2000, 7);
  auto b = estimate_measure_ratio(kBox, 0, p10, Shell{}, 2000, 7);
  CHECK(a.ratio == b.ratio);
  CHECK(a.accepted == b.accepted);
  CHECK(a.single <= a.accepted);
  CHECK(a.accepted <= a.samples);
  CHECK_THROWS_AS(estimate_measure_ratio(kBox, 0, p10, Shell{}, 0, 7), Error);
  CHECK_THROWS_AS(estimate_measure_ratio(kBox, 2, p10, Shell{}, 10, 7), Error);

  SUBCASE("a single draw is deterministic") {
    try {
      auto one = estimate_measure_ratio(kBox, 0, p10, Shell{}, 1, 7);
      CHECK(one.accepted == 1);
      CHECK((one.ratio == 0.0 || one.ratio == 1.0));
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InsufficientSamples);
    }
  }
}

TEST_CASE("measure regression at the reference configuration") {
  // values recorded from the reference run (1e5 draws, seed 7, axis 0)
  struct Ref { double rho, ratio, err; };
  for (Ref r : {Ref{10, 0.036831624948213883, 0.00068854508127205239},
                Ref{20, 0.12511039152193112, 0.00121021966861711},
                Ref{40, 0.24230336777855116, 0.0015676310199790643}}) {
    auto params = AsymptoticParams::make(r.rho, 0.04, 2, 17);
    auto est = estimate_measure_ratio(kBox, 0, params, Shell{}, 100000, 7);
    CHECK(est.ratio == doctest::Approx(r.ratio).epsilon(1e-12));
    CHECK(est.std_error == doctest::Approx(r.err).epsilon(1e-9));
  }
}

TEST_CASE("classification CSV") {
  auto params = AsymptoticParams::make(10, 0.04, 2, 17);
  std::vector<LatticeVector> pts{{0, 8}, {6, 6}};
  std::vector<DomainClass> cls;
  for (const auto& p : pts) cls.push_back(classify(p, params, kBox));
  std::ostringstream os;
  write_classification_csv(os, kBox, pts, cls);
  std::string s = os.str();
  CHECK(s.rfind("index,norm2,tag,delta,j,beta,witness_count\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 3);
}
