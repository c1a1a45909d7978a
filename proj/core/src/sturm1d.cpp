#include "spectra/sturm1d.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "spectra/errors.hpp"
#include "spectra/numeric.hpp"

namespace spectra {

Matrix assemble_T(const DirectionalPotential& p, int n_trunc) {
  if (n_trunc < 0) fail(ErrorKind::Truncation, "n_trunc must be >= 0");
  if (n_trunc < 4 * p.support())
    fail(ErrorKind::Truncation, "n_trunc = " + std::to_string(n_trunc) + " below 4 * support = " +
                                    std::to_string(4 * p.support()));
  const int m = p.m;
  const int size = m * (n_trunc + 1);
  Matrix t = Matrix::Zero(size, size);
  for (int n = 0; n <= n_trunc; ++n)
    for (int i = 0; i < m; ++i) t(n * m + i, n * m + i) = double(n) * n * p.delta_norm2;
  for (const auto& [g, w] : p.coefficients) {
    for (int n = 0; n <= n_trunc; ++n) {
      const int a = n + g, b = std::abs(n - g);
      for (int n2 : {a, b}) {
        double f = n2 <= n_trunc ? cosine_triple(g, n, n2) : 0.0;
        if (f != 0)
          for (int i = 0; i < m; ++i)
            for (int k = 0; k < m; ++k) t(n * m + i, n2 * m + k) += w(i, k) * f;
        if (a == b) break;
      }
    }
  }
  return t;
}

EigenpairSet eigensolve_T(const Matrix& t, int m, double tol) {
  if (m < 1 || t.rows() % m) fail(ErrorKind::Contract, "matrix size is not a multiple of m");
  SymmetricEigen es = eigensolve_symmetric(t, tol);
  EigenpairSet set;
  set.m = m;
  set.n_trunc = static_cast<int>(t.rows() / m) - 1;
  set.norm = es.norm;
  for (Eigen::Index k = 0; k < es.values.size(); ++k) {
    Eigenpair1D e;
    e.lambda = es.values(k);
    e.coeffs = es.vectors.col(k);
    e.residual = es.residuals(k);
    set.pairs.push_back(std::move(e));
  }
  return set;
}

EigenpairSet label_bands(const EigenpairSet& set, double sup_P, int max_band) {
  if (max_band < 0 || max_band > set.n_trunc) fail(ErrorKind::Parameter, "max_band outside [0, n_trunc]");
  const int m = set.m;
  EigenpairSet out = set;
  out.pairs.clear();
  out.sup_P = sup_P;
  out.max_band = max_band;
  std::vector<std::vector<int>> members(max_band + 1);
  std::vector<Eigenpair1D> labeled;
  for (const auto& e : set.pairs) {
    int best = 0;
    double best_w = -1;
    for (int n = 0; n <= set.n_trunc; ++n) {
      double w = 0;
      for (int i = 0; i < m; ++i) w += e.coeffs(n * m + i) * e.coeffs(n * m + i);
      bool better = w > best_w;
      if (w == best_w) {
        double dn = std::abs(e.lambda - double(n) * n * set.delta_norm2);
        double db = std::abs(e.lambda - double(best) * best * set.delta_norm2);
        better = dn < db;
      }
      if (better) {
        best_w = w;
        best = n;
      }
    }
    if (best > max_band) continue;
    Eigenpair1D f = e;
    f.j = best;
    f.in_window = std::abs(f.lambda - double(best) * best * set.delta_norm2) <= sup_P;
    members[best].push_back(static_cast<int>(labeled.size()));
    labeled.push_back(std::move(f));
  }
  for (int j = 0; j <= max_band; ++j) {
    if (static_cast<int>(members[j].size()) != m) {
      std::string msg = "band " + std::to_string(j) + " claimed by " + std::to_string(members[j].size()) +
                        " pairs (expected " + std::to_string(m) + "); overlaps:";
      for (int idx : members[j]) {
        const auto& e = labeled[idx];
        double w = 0;
        for (int i = 0; i < m; ++i) w += e.coeffs(j * m + i) * e.coeffs(j * m + i);
        msg += " lambda=" + format_double(e.lambda) + " weight=" + format_double(w);
      }
      fail(ErrorKind::Labeling, msg);
    }
    for (int s = 0; s < m; ++s) labeled[members[j][s]].slot = s;  // members are in ascending lambda
  }
  out.pairs = std::move(labeled);
  return out;
}

const Eigenpair1D& EigenpairSet::band(int j, int slot) const {
  for (const auto& e : pairs)
    if (e.j == j && e.slot == slot) return e;
  fail(ErrorKind::Coverage, "band " + std::to_string(j) + " slot " + std::to_string(slot) + " not labeled");
}

EigenpairSet solve_directional(const DirectionalPotential& p, int n_trunc, double tol) {
  EigenpairSet raw = eigensolve_T(assemble_T(p, n_trunc), p.m, tol);
  raw.axis = p.axis;
  raw.delta_norm2 = p.delta_norm2;
  return label_bands(raw, p.sup_norm(), n_trunc / 2);
}

double gram_deviation(const EigenpairSet& set) {
  double worst = 0;
  for (std::size_t a = 0; a < set.pairs.size(); ++a)
    for (std::size_t b = a; b < set.pairs.size(); ++b) {
      double g = set.pairs[a].coeffs.dot(set.pairs[b].coeffs);
      worst = std::max(worst, std::abs(g - (a == b ? 1.0 : 0.0)));
    }
  return worst;
}

DecayReport decay_report(const EigenpairSet& set, const AsymptoticParams& params, double r) {
  const double r1 = params.r1(set.delta_norm2);
  if (r < r1) fail(ErrorKind::Parameter, "decay_report radius r below r1");
  const int m = set.m;
  DecayReport rep;
  rep.r = r;
  rep.threshold1 = params.rho_pow(-(params.l - 1) * params.alpha);
  rep.threshold2 = params.rho_pow(-(params.l - 2) * params.alpha);
  const int n_lo = static_cast<int>(std::ceil(2 * r));
  const int n_in = static_cast<int>(std::ceil(2 * r)) - 1;   // |n| < 2r
  const int n1_in = static_cast<int>(std::ceil(r1 / 2)) - 1;  // |n1| < r1/2
  const int j1_lo = static_cast<int>(std::ceil(6 * r));
  for (const auto& e : set.pairs) {
    if (!(e.j + 1 < r)) continue;
    DecayReport::Row row;
    row.j = e.j;
    row.slot = e.slot;
    for (int n = n_lo; n <= set.n_trunc; ++n)
      for (int i = 0; i < m; ++i) row.offband = std::max(row.offband, std::abs(e.coeff(n, i, m)));
    if (e.j + j1_lo > set.max_band) rep.tail_complete = false;
    for (int n = -n_in; n <= n_in; ++n)
      for (int n1 = -n1_in; n1 <= n1_in; ++n1)
        for (int i = 0; i < m; ++i) {
          CompensatedSum s;
          for (const auto& f : set.pairs)
            if (std::abs(f.j - e.j) >= j1_lo) s.add(std::abs(f.coeff(std::abs(n + n1), i, m)));
          row.tail_sum = std::max(row.tail_sum, s.value());
        }
    rep.max_offband = std::max(rep.max_offband, row.offband);
    rep.max_tail_sum = std::max(rep.max_tail_sum, row.tail_sum);
    rep.rows.push_back(row);
  }
  return rep;
}

std::string spectrum_to_json(const EigenpairSet& set, double drop_below) {
  nlohmann::json j;
  j["axis"] = set.axis;
  j["m"] = set.m;
  j["n_trunc"] = set.n_trunc;
  j["delta_norm2"] = set.delta_norm2;
  j["sup_P"] = set.sup_P;
  j["pairs"] = nlohmann::json::array();
  for (const auto& e : set.pairs) {
    nlohmann::json coeffs = nlohmann::json::array();
    for (int n = 0; n <= set.n_trunc; ++n)
      for (int i = 0; i < set.m; ++i) {
        double c = e.coeffs(n * set.m + i);
        if (std::abs(c) >= drop_below) coeffs.push_back({n, i, c});
      }
    j["pairs"].push_back({{"j", e.j}, {"slot", e.slot}, {"lambda", e.lambda}, {"residual", e.residual},
                          {"in_window", e.in_window}, {"coeffs", coeffs}});
  }
  return j.dump(2) + "\n";
}

}  // namespace spectra
