#include "spectra/potential.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "spectra/errors.hpp"
#include "spectra/numeric.hpp"

namespace spectra {

using nlohmann::json;

void MatrixFourierPotential::validate() const {
  if (m < 1) fail(ErrorKind::Parameter, "potential matrix size m must be >= 1");
  for (const auto& [g, w] : coefficients) {
    if (static_cast<int>(g.size()) != dim())
      fail(ErrorKind::Parameter, "coefficient index " + to_string(g) + " has wrong dimension");
    for (int c : g)
      if (c < 0) fail(ErrorKind::Parameter, "coefficient index " + to_string(g) + " is not a nonnegative representative");
    if (w.rows() != m || w.cols() != m)
      fail(ErrorKind::Parameter, "coefficient at " + to_string(g) + " is not m x m");
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < i; ++k)
        if (w(i, k) != w(k, i)) fail(ErrorKind::Parameter, "coefficient at " + to_string(g) + " is not symmetric");
    if (!w.allFinite()) fail(ErrorKind::Parameter, "coefficient at " + to_string(g) + " is not finite");
  }
}

MatrixFourierPotential make_zero_potential(const BoxGeometry& g, int m, int l) {
  MatrixFourierPotential v;
  v.m = m;
  v.l = l;
  v.geometry = g;
  return v;
}

std::map<LatticeVector, Matrix> expand_orbits(const MatrixFourierPotential& v) {
  std::map<LatticeVector, Matrix> out;
  for (const auto& [g, w] : v.coefficients) {
    double size = orbit_size(g);
    for (const auto& s : orbit(g)) out[s] = w / size;
  }
  return out;
}

DecaySums validate_decay(const MatrixFourierPotential& v) {
  DecaySums r{Matrix::Zero(v.m, v.m), Matrix::Zero(v.m, v.m)};
  for (const auto& [g, w] : v.coefficients) {
    double weight = 1 + std::pow(v.geometry.norm2(g), v.l);
    r.S += w.cwiseAbs2() * weight;
    r.M += w.cwiseAbs();
  }
  return r;
}

TruncationResult truncate(const MatrixFourierPotential& v, const AsymptoticParams& params) {
  TruncationResult r;
  r.radius = params.rho_alpha();
  r.potential = make_zero_potential(v.geometry, v.m, v.l);
  Matrix tail2 = Matrix::Zero(v.m, v.m);
  for (const auto& [g, w] : v.coefficients) {
    if (v.geometry.norm(g) < r.radius)
      r.potential.coefficients.emplace(g, w);
    else
      tail2 += w.cwiseAbs2();
  }
  r.tail = tail2.cwiseSqrt();
  // sum_{|g| >= R} W^2 <= R^(-2l) sum W^2 |g|^(2l) <= S R^(-2l), and
  // R^(-l) <= R^(-p) since R >= 1 whenever rho >= 1.
  DecaySums sums = validate_decay(v);
  double scale = params.rho_pow(-params.p * params.alpha);
  r.bound = sums.S.cwiseSqrt() * scale;
  if (r.radius >= 1) {
    for (int i = 0; i < v.m; ++i)
      for (int k = 0; k < v.m; ++k)
        if (!(r.tail(i, k) <= r.bound(i, k)))
          fail(ErrorKind::Consistency, "truncation tail exceeds its Cauchy-Schwarz bound");
  }
  return r;
}

int DirectionalPotential::support() const {
  int s = 0;
  for (const auto& [n, p] : coefficients)
    if (!p.isZero(0)) s = std::max(s, n);
  return s;
}

Matrix DirectionalPotential::mean() const {
  auto it = coefficients.find(0);
  return it == coefficients.end() ? Matrix::Zero(m, m) : it->second;
}

Matrix DirectionalPotential::evaluate(double s) const {
  Matrix out = Matrix::Zero(m, m);
  for (const auto& [n, p] : coefficients) out += p * std::cos(n * s);
  return out;
}

double DirectionalPotential::sup_norm() const {
  const int grid = 8192;
  double best = 0;
  for (int i = 0; i <= grid; ++i) {
    Matrix p = evaluate(std::numbers::pi * i / grid);
    Eigen::SelfAdjointEigenSolver<Matrix> es(p, Eigen::EigenvaluesOnly);
    best = std::max(best, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return best;
}

namespace {

bool on_ray(const LatticeVector& g, int axis) {
  for (std::size_t k = 0; k < g.size(); ++k)
    if (static_cast<int>(k) != axis && g[k] != 0) return false;
  return true;
}

}  // namespace

DirectionalPotential directional_part(const MatrixFourierPotential& v, int axis) {
  if (axis < 0 || axis >= v.dim()) fail(ErrorKind::Parameter, "axis out of range");
  DirectionalPotential p;
  p.axis = axis;
  p.m = v.m;
  p.delta_norm2 = v.geometry.step2(axis);
  for (const auto& [g, w] : v.coefficients)
    if (on_ray(g, axis)) p.coefficients.emplace(g[axis], w);
  return p;
}

MatrixFourierPotential remainder(const MatrixFourierPotential& v, int axis) {
  MatrixFourierPotential r = make_zero_potential(v.geometry, v.m, v.l);
  for (const auto& [g, w] : v.coefficients)
    if (!on_ray(g, axis)) r.coefficients.emplace(g, w);
  return r;
}

CouplingTable coupling_table(const MatrixFourierPotential& v, int axis, const AsymptoticParams& params) {
  CouplingTable t;
  t.axis = axis;
  t.radius = params.rho_alpha();
  const double delta = std::sqrt(v.geometry.step2(axis));
  const double r1 = params.r1(v.geometry.step2(axis));
  for (const auto& [g, w] : v.coefficients) {
    if (on_ray(g, axis)) continue;
    if (!(v.geometry.norm(g) < t.radius)) continue;
    CouplingEntry e;
    e.orbit = g;
    e.n1 = g[axis];
    e.beta1 = g;
    e.beta1[axis] = 0;
    e.multiplicity = orbit_size(g);
    e.d = w / double(e.multiplicity);
    if (!(v.geometry.norm(e.beta1) < params.witness_radius()) ||
        !(e.n1 * delta < params.witness_radius()) || !(e.n1 < r1 / 2))
      fail(ErrorKind::Consistency, "coupling key " + to_string(g) + " violates |beta1| < p rho^alpha, |n1| < r1/2");
    t.entries.push_back(std::move(e));
  }
  return t;
}

MatrixFourierPotential generate_random_potential(const GeneratorSpec& spec, const BoxGeometry& g) {
  const int d = g.dim();
  double lmin = (d + 20.0) * (d - 1.0) / 2.0 + d + 3.0;
  if (!(spec.l > lmin)) fail(ErrorKind::Parameter, "generator l must exceed " + format_double(lmin));
  if (spec.m < 1) fail(ErrorKind::Parameter, "generator m must be >= 1");
  if (!(spec.amplitude >= 0)) fail(ErrorKind::Parameter, "generator amplitude must be >= 0");
  MatrixFourierPotential v = make_zero_potential(g, spec.m, spec.l);
  if (spec.amplitude == 0) return v;
  SplitMix64 rng(spec.seed);
  for (const auto& orbit_rep : build_orbits(g, std::nextafter(spec.support_radius, INFINITY))) {
    double scale = spec.amplitude * std::min(1.0, std::pow(2.0 / (1.0 + g.norm(orbit_rep)), spec.l + 1));
    Matrix w(spec.m, spec.m);
    for (int i = 0; i < spec.m; ++i)
      for (int k = i; k < spec.m; ++k) w(i, k) = w(k, i) = scale * rng.uniform(-1.0, 1.0);
    v.coefficients.emplace(orbit_rep, w);
  }
  return v;
}

Matrix evaluate(const MatrixFourierPotential& v, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != v.dim()) fail(ErrorKind::Domain, "point has wrong dimension");
  for (int k = 0; k < v.dim(); ++k)
    if (!(x[k] >= 0 && x[k] <= v.geometry.edge(k))) fail(ErrorKind::Domain, "point outside the box");
  Matrix out = Matrix::Zero(v.m, v.m);
  for (const auto& [g, w] : v.coefficients) {
    double u = 1;
    for (int k = 0; k < v.dim(); ++k) u *= std::cos(g[k] * std::numbers::pi * x[k] / v.geometry.edge(k));
    out += w * u;
  }
  return out;
}

double sup_norm_bound(const MatrixFourierPotential& v) {
  double s = 0;
  for (const auto& [g, w] : v.coefficients) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(w, Eigen::EigenvaluesOnly);
    s += es.eigenvalues().cwiseAbs().maxCoeff();
  }
  return s;
}

std::string potential_to_json(const MatrixFourierPotential& v) {
  json j;
  j["m"] = v.m;
  j["d"] = v.dim();
  j["l"] = v.l;
  j["a"] = v.geometry.edges();
  j["coefficients"] = json::array();
  for (const auto& [g, w] : v.coefficients) {
    json rows = json::array();
    for (int i = 0; i < v.m; ++i) {
      json row = json::array();
      for (int k = 0; k < v.m; ++k) row.push_back(w(i, k));
      rows.push_back(row);
    }
    j["coefficients"].push_back({{"index", g}, {"matrix", rows}});
  }
  return j.dump(2) + "\n";
}

MatrixFourierPotential potential_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("potential JSON: ") + e.what());
  }
  try {
    std::vector<double> a = j.at("a").get<std::vector<double>>();
    int d = j.at("d").get<int>();
    if (static_cast<int>(a.size()) != d) fail(ErrorKind::Config, "potential JSON: len(a) != d");
    MatrixFourierPotential v = make_zero_potential(BoxGeometry(a), j.at("m").get<int>(), j.at("l").get<int>());
    for (const auto& c : j.at("coefficients")) {
      LatticeVector g = c.at("index").get<LatticeVector>();
      const auto& rows = c.at("matrix");
      if (static_cast<int>(rows.size()) != v.m) fail(ErrorKind::Config, "potential JSON: matrix at " + to_string(g) + " is not m x m");
      Matrix w(v.m, v.m);
      for (int i = 0; i < v.m; ++i) {
        if (static_cast<int>(rows[i].size()) != v.m) fail(ErrorKind::Config, "potential JSON: matrix at " + to_string(g) + " is not m x m");
        for (int k = 0; k < v.m; ++k) w(i, k) = rows[i][k].get<double>();
      }
      if (!v.coefficients.emplace(g, w).second) fail(ErrorKind::Config, "potential JSON: duplicate index " + to_string(g));
    }
    v.validate();
    return v;
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("potential JSON: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    fail(ErrorKind::Config, std::string("potential JSON: ") + e.what());
  }
}

MatrixFourierPotential load_potential(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "cannot open potential file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return potential_from_json(ss.str());
}

void save_potential(const MatrixFourierPotential& v, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Config, "cannot write potential file " + path);
  out << potential_to_json(v);
}

}  // namespace spectra
