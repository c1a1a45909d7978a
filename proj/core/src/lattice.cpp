#include "spectra/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "spectra/errors.hpp"
#include "spectra/numeric.hpp"

namespace spectra {

BoxGeometry::BoxGeometry(std::vector<double> edges) : edges_(std::move(edges)) {
  if (edges_.size() < 2) fail(ErrorKind::Geometry, "dimension must be >= 2, got " + std::to_string(edges_.size()));
  for (double a : edges_) {
    if (!(a > 0) || !std::isfinite(a))
      fail(ErrorKind::Geometry, "edge lengths must be positive and finite");
    step_.push_back(std::numbers::pi / a);
    step2_.push_back(step_.back() * step_.back());
  }
}

double BoxGeometry::volume() const {
  double v = 1;
  for (double a : edges_) v *= a;
  return v;
}

std::vector<double> BoxGeometry::frequency(const LatticeVector& v) const {
  std::vector<double> f(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) f[k] = v[k] * step_[k];
  return f;
}

double BoxGeometry::norm2(const LatticeVector& v) const {
  double s = 0;
  for (std::size_t k = 0; k < v.size(); ++k) s += double(v[k]) * v[k] * step2_[k];
  return s;
}

double BoxGeometry::norm(const LatticeVector& v) const { return std::sqrt(norm2(v)); }

double BoxGeometry::dot(const LatticeVector& u, const LatticeVector& v) const {
  double s = 0;
  for (std::size_t k = 0; k < v.size(); ++k) s += double(u[k]) * v[k] * step2_[k];
  return s;
}

double BoxGeometry::dot(const std::vector<double>& x, const LatticeVector& v) const {
  double s = 0;
  for (std::size_t k = 0; k < v.size(); ++k) s += x[k] * v[k] * step_[k];
  return s;
}

int orbit_size(const LatticeVector& v) {
  int n = 1;
  for (int c : v)
    if (c != 0) n *= 2;
  return n;
}

LatticeVector orbit_representative(const LatticeVector& v) {
  LatticeVector r(v);
  for (int& c : r) c = std::abs(c);
  return r;
}

std::vector<LatticeVector> orbit(const LatticeVector& v) {
  std::vector<LatticeVector> out{orbit_representative(v)};
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] == 0) continue;
    std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
      LatticeVector w = out[i];
      w[k] = -w[k];
      out.push_back(w);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

LatticeVector unit(int d, int axis, int sign) {
  LatticeVector e(d, 0);
  e[axis] = sign;
  return e;
}

std::string to_string(const LatticeVector& v) {
  std::string s = "(";
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) s += ",";
    s += std::to_string(v[k]);
  }
  return s + ")";
}

AsymptoticParams AsymptoticParams::make(double rho, double alpha, int d, int l) {
  if (d < 2) fail(ErrorKind::Parameter, "d must be >= 2");
  if (!(rho > 0)) fail(ErrorKind::Parameter, "rho must be positive");
  if (!(alpha > 0) || !(alpha < 1.0 / (d + 20)))
    fail(ErrorKind::Parameter, "alpha must lie in (0, 1/(d+20))");
  double lmin = (d + 20.0) * (d - 1.0) / 2.0 + d + 3.0;
  if (!(l > lmin))
    fail(ErrorKind::Parameter, "l must exceed (d+20)(d-1)/2 + d + 3 = " + format_double(lmin));
  AsymptoticParams p;
  p.rho = rho;
  p.alpha = alpha;
  p.d = d;
  p.l = l;
  p.p = l - d;
  if (p.p < 1) fail(ErrorKind::Parameter, "p = l - d must be >= 1");
  int kmax = std::max(d, 2);
  p.alpha_k.resize(kmax + 1);
  double f = 1;
  for (int k = 0; k <= kmax; ++k, f *= 3) p.alpha_k[k] = f * alpha;
  double a1 = p.alpha_k[1], a2 = p.alpha_k[2];
  if (!(2 * a2 - a1 + (d + 3) * alpha < 1)) fail(ErrorKind::Parameter, "2 alpha_2 - alpha_1 + (d+3) alpha < 1 violated");
  if (!(a2 > 2 * a1)) fail(ErrorKind::Parameter, "alpha_2 > 2 alpha_1 violated");
  p.q = static_cast<int>(std::floor(d / (2 * alpha))) + 2;
  p.p2 = static_cast<int>(std::floor(d / (2 * a2))) + 1;
  return p;
}

double AsymptoticParams::rho_pow(double e) const { return std::pow(rho, e); }

double AsymptoticParams::r1(double delta_norm2) const { return rho_pow(a(1)) / delta_norm2 + 1; }

double AsymptoticParams::r(int k, double delta_norm2) const {
  if (k < 1) fail(ErrorKind::Parameter, "r_k defined for k >= 1");
  double r = r1(delta_norm2);
  for (int i = 1; i < k; ++i) r *= 7;
  return r;
}

namespace {

// Visits all integer vectors with |v| < cutoff, lexicographic order.
void enumerate_ball(const BoxGeometry& g, double cutoff, bool nonnegative,
                    const std::function<void(const LatticeVector&)>& visit) {
  if (cutoff < 0) fail(ErrorKind::Parameter, "cutoff must be >= 0");
  const int d = g.dim();
  const double c2 = cutoff * cutoff;
  LatticeVector v(d, 0);
  std::function<void(int, double)> rec = [&](int k, double acc) {
    if (k == d) {
      if (acc < c2) visit(v);
      return;
    }
    double rem = c2 - acc;
    if (rem <= 0) return;
    int nmax = static_cast<int>(std::floor(std::sqrt(rem / g.step2(k))));
    for (int n = nonnegative ? 0 : -nmax; n <= nmax; ++n) {
      v[k] = n;
      rec(k + 1, acc + double(n) * n * g.step2(k));
    }
    v[k] = 0;
  };
  rec(0, 0.0);
}

}  // namespace

std::vector<LatticeVector> build_lattice(const BoxGeometry& g, double cutoff) {
  std::vector<LatticeVector> out;
  enumerate_ball(g, cutoff, false, [&](const LatticeVector& v) { out.push_back(v); });
  return out;
}

std::vector<LatticeVector> build_orbits(const BoxGeometry& g, double cutoff) {
  std::vector<LatticeVector> out;
  enumerate_ball(g, cutoff, true, [&](const LatticeVector& v) { out.push_back(v); });
  return out;
}

Decomposition decompose(const LatticeVector& gamma, int axis) {
  Decomposition d;
  d.j = gamma.at(axis);
  d.beta = gamma;
  d.beta[axis] = 0;
  return d;
}

LatticeVector recompose(int j, const LatticeVector& beta, int axis) {
  LatticeVector v(beta);
  v.at(axis) += j;
  return v;
}

const char* to_string(DomainTag t) {
  switch (t) {
    case DomainTag::NonResonance: return "non_resonance";
    case DomainTag::SingleResonance: return "single_resonance";
    case DomainTag::OtherResonance: return "other_resonance";
    case DomainTag::HigherResonance: return "higher_resonance";
  }
  return "?";
}

int integer_rank(const std::vector<LatticeVector>& vs) {
  if (vs.empty()) return 0;
  const std::size_t d = vs[0].size();
  std::vector<std::vector<long long>> m;
  for (const auto& v : vs) m.emplace_back(v.begin(), v.end());
  int rank = 0;
  for (std::size_t col = 0; col < d && rank < static_cast<int>(m.size()); ++col) {
    std::size_t piv = rank;
    while (piv < m.size() && m[piv][col] == 0) ++piv;
    if (piv == m.size()) continue;
    std::swap(m[piv], m[rank]);
    for (std::size_t r = rank + 1; r < m.size(); ++r) {
      if (m[r][col] == 0) continue;
      long long a = m[rank][col], b = m[r][col];
      long long gcd = std::gcd(a, b);
      for (std::size_t c = 0; c < d; ++c) m[r][c] = m[r][c] * (a / gcd) - m[rank][c] * (b / gcd);
      long long row_gcd = 0;
      for (long long x : m[r]) row_gcd = std::gcd(row_gcd, x);
      if (row_gcd > 1)
        for (long long& x : m[r]) x /= row_gcd;
    }
    ++rank;
  }
  return rank;
}

WitnessTable::WitnessTable(const BoxGeometry& g, const AsymptoticParams& params)
    : geometry_(g), params_(params) {
  if (g.dim() != params.d) fail(ErrorKind::Parameter, "geometry and params disagree on d");
  for (const auto& b : build_lattice(g, params.witness_radius())) {
    bool zero = std::all_of(b.begin(), b.end(), [](int c) { return c == 0; });
    if (zero) continue;
    int gcd = 0;
    for (int c : b) gcd = std::gcd(gcd, std::abs(c));
    entries_.push_back({b, g.frequency(b), g.norm2(b), gcd == 1});
  }
}

namespace {

// |x|^2 - |x+b|^2 = -(2 x.b + |b|^2)
double resonance_defect(const std::vector<double>& x, const WitnessTable::Entry& e) {
  double s = 0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * e.freq[k];
  return -(2 * s + e.norm2);
}

bool in_E_impl(const std::vector<double>& x, int k, const WitnessTable& table) {
  const double level = table.params().rho_pow(table.params().a(k));
  std::vector<LatticeVector> hits;
  for (const auto& e : table.entries()) {
    if (!e.primitive) continue;
    if (std::abs(resonance_defect(x, e)) < level) hits.push_back(e.b);
  }
  if (static_cast<int>(hits.size()) < k) return false;
  return integer_rank(hits) >= k;
}

}  // namespace

bool in_E(const std::vector<double>& x, int k, const WitnessTable& table) {
  if (k < 2 || k > table.params().d) fail(ErrorKind::Parameter, "E_k defined for 2 <= k <= d");
  return in_E_impl(x, k, table);
}

DomainClass classify(const LatticeVector& gamma, const AsymptoticParams& params, const BoxGeometry& g,
                     const Shell& shell) {
  return classify(gamma, WitnessTable(g, params), shell);
}

DomainClass classify(const LatticeVector& gamma, const WitnessTable& table, const Shell& shell) {
  const BoxGeometry& g = table.geometry();
  const AsymptoticParams& params = table.params();
  if (static_cast<int>(gamma.size()) != g.dim()) fail(ErrorKind::Parameter, "gamma has wrong dimension");
  const double norm = g.norm(gamma);
  if (!shell.contains(norm, params.rho))
    fail(ErrorKind::Precondition, "|gamma| = " + format_double(norm) + " outside the shell (" +
                                      format_double(shell.c1 * params.rho) + ", " +
                                      format_double(shell.c2 * params.rho) + ")");
  const std::vector<double> x = g.frequency(gamma);
  const double level1 = params.rho_pow(params.a(1));

  DomainClass out;
  for (const auto& e : table.entries())
    if (std::abs(resonance_defect(x, e)) < level1) out.witnesses.push_back(e.b);
  if (out.witnesses.empty()) return out;
  out.order = 1;
  for (int k = 2; k <= params.d; ++k)
    if (in_E_impl(x, k, table)) out.order = k;
  if (out.order >= 2) {
    out.tag = DomainTag::HigherResonance;
    return out;
  }

  // Axis directions delta = +-e_k with gamma in V_delta(rho^alpha_1).
  double best = INFINITY;
  for (int k = 0; k < g.dim(); ++k) {
    for (int s : {1, -1}) {
      double defect = std::abs(-(2 * s * x[k] * std::sqrt(g.step2(k)) + g.step2(k)));
      if (defect < level1 && defect < best) {
        best = defect;
        out.axis = k;
        out.sign = s;
      }
    }
  }
  out.tag = DomainTag::OtherResonance;
  if (out.axis < 0) return out;

  Decomposition dec = decompose(gamma, out.axis);
  out.j = out.sign * dec.j;
  out.beta = dec.beta;
  bool bounds = std::abs(out.j) < params.r1(g.step2(out.axis));
  for (int k = 0; k < g.dim(); ++k)
    if (k != out.axis && !(std::abs(x[k]) > level1 / 3)) bounds = false;
  if (bounds) {
    out.tag = DomainTag::SingleResonance;
  } else {
    out.axis = -1;
    out.sign = 0;
    out.j = 0;
    out.beta.clear();
  }
  return out;
}

MeasureEstimate estimate_measure_ratio(const BoxGeometry& g, int axis, const AsymptoticParams& params,
                                       const Shell& shell, std::uint64_t samples, std::uint64_t seed) {
  if (samples < 1) fail(ErrorKind::Parameter, "samples must be >= 1");
  if (axis < 0 || axis >= g.dim()) fail(ErrorKind::Parameter, "axis out of range");
  WitnessTable table(g, params);
  const int d = g.dim();
  const double s = std::sqrt(g.step2(axis));
  const double level1 = params.rho_pow(params.a(1));
  // |2 x_axis s + s^2| < level1
  const double lo_axis = (-level1 - s * s) / (2 * s);
  const double hi_axis = (level1 - s * s) / (2 * s);
  const double R = shell.c2 * params.rho;

  MeasureEstimate est;
  est.samples = samples;
  std::vector<double> x(d);
  for (std::uint64_t i = 0; i < samples; ++i) {
    SplitMix64 rng(derive_seed(seed, i));
    for (int k = 0; k < d; ++k) x[k] = k == axis ? rng.uniform(lo_axis, hi_axis) : rng.uniform(-R, R);
    double n2 = 0;
    for (double c : x) n2 += c * c;
    if (!shell.contains(std::sqrt(n2), params.rho)) continue;
    double defect = std::abs(2 * x[axis] * s + s * s);
    if (!(defect < level1)) continue;
    ++est.accepted;
    if (!in_E_impl(x, 2, table)) ++est.single;
  }
  if (est.accepted == 0) fail(ErrorKind::InsufficientSamples, "no draws landed in shell ∩ V_delta");
  est.ratio = double(est.single) / double(est.accepted);
  est.std_error = std::sqrt(est.ratio * (1 - est.ratio) / double(est.accepted));
  return est;
}

void write_classification_csv(std::ostream& os, const BoxGeometry& g, const std::vector<LatticeVector>& points,
                              const std::vector<DomainClass>& classes) {
  os << "index,norm2,tag,delta,j,beta,witness_count\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const DomainClass& c = classes[i];
    std::string delta = c.axis >= 0 ? to_string(unit(g.dim(), c.axis, c.sign)) : "";
    std::string beta = c.tag == DomainTag::SingleResonance ? to_string(c.beta) : "";
    std::string j = c.tag == DomainTag::SingleResonance ? std::to_string(c.j) : "";
    os << '"' << to_string(points[i]) << "\"," << format_double(g.norm2(points[i])) << ',' << to_string(c.tag)
       << ",\"" << delta << "\"," << j << ",\"" << beta << "\"," << c.witnesses.size() << '\n';
  }
}

}  // namespace spectra
