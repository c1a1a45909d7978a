#include "spectra/refsolver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <unordered_map>

#include "spectra/errors.hpp"
#include "spectra/numeric.hpp"

namespace spectra {

OracleBasis::OracleBasis(const BoxGeometry& geometry, double cutoff, int m, int cap)
    : geometry_(geometry), cutoff_(cutoff), m_(m), orbits_(build_orbits(geometry, cutoff)) {
  if (m < 1) fail(ErrorKind::Parameter, "m must be >= 1");
  long long required = static_cast<long long>(orbits_.size()) * m;
  if (required > cap)
    fail(ErrorKind::Resource, "oracle basis needs size " + std::to_string(required) + " > cap " + std::to_string(cap));
  for (std::size_t i = 0; i < orbits_.size(); ++i) position_.emplace(orbits_[i], static_cast<int>(i));
}

OracleBasis::OracleBasis(const BoxGeometry& geometry, std::vector<LatticeVector> orbits, int m, double cutoff)
    : geometry_(geometry), cutoff_(cutoff), m_(m), orbits_(std::move(orbits)) {
  for (std::size_t i = 0; i < orbits_.size(); ++i)
    if (!position_.emplace(orbits_[i], static_cast<int>(i)).second)
      fail(ErrorKind::Parameter, "duplicate basis orbit " + to_string(orbits_[i]));
}

int OracleBasis::find(const LatticeVector& g) const {
  auto it = position_.find(g);
  return it == position_.end() ? -1 : it->second;
}

namespace {

// Distinct targets g' with prod_c cos_triple(w_c, g_c, g'_c) != 0.
void for_each_target(const LatticeVector& g, const LatticeVector& w,
                     const std::function<void(const LatticeVector&, double)>& visit) {
  const std::size_t d = g.size();
  std::vector<std::vector<int>> options(d);
  for (std::size_t c = 0; c < d; ++c) {
    options[c].push_back(g[c] + w[c]);
    int other = std::abs(g[c] - w[c]);
    if (other != options[c][0]) options[c].push_back(other);
  }
  LatticeVector t(d);
  std::function<void(std::size_t, double)> rec = [&](std::size_t c, double f) {
    if (c == d) {
      visit(t, f);
      return;
    }
    for (int x : options[c]) {
      double fc = cosine_triple(w[c], g[c], x);
      if (fc == 0) continue;
      t[c] = x;
      rec(c + 1, f * fc);
    }
  };
  rec(0, 1.0);
}

}  // namespace

SparseMatrix potential_matrix(const MatrixFourierPotential& v, const OracleBasis& basis) {
  if (v.m != basis.m()) fail(ErrorKind::Contract, "potential and basis disagree on m");
  if (v.dim() != basis.geometry().dim()) fail(ErrorKind::Contract, "potential and basis disagree on d");
  const int m = basis.m();
  const int n = basis.size();
  std::vector<Eigen::Triplet<double>> trips;
  const auto& orbits = basis.orbits();
  for (std::size_t a = 0; a < orbits.size(); ++a) {
    // column block b -> accumulated m x m block, filled for b >= a only
    std::map<int, Matrix> blocks;
    for (const auto& [w, coeff] : v.coefficients) {
      for_each_target(orbits[a], w, [&](const LatticeVector& t, double f) {
        int b = basis.find(t);
        if (b < 0) return;
        if (b < static_cast<int>(a)) return;
        auto it = blocks.find(b);
        if (it == blocks.end()) it = blocks.emplace(b, Matrix::Zero(m, m)).first;
        it->second += coeff * f;
      });
    }
    for (const auto& [b, blk] : blocks) {
      for (int i = 0; i < m; ++i)
        for (int k = 0; k < m; ++k) {
          if (b == static_cast<int>(a) && k < i) continue;
          double x = blk(i, k);
          if (x == 0) continue;
          int r = static_cast<int>(a) * m + i, c = b * m + k;
          trips.emplace_back(r, c, x);
          if (r != c) trips.emplace_back(c, r, x);
        }
    }
  }
  SparseMatrix out(n, n);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SparseMatrix assemble_L(const MatrixFourierPotential& v, const OracleBasis& basis) {
  SparseMatrix out = potential_matrix(v, basis);
  const int m = basis.m();
  SparseMatrix diag(basis.size(), basis.size());
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t a = 0; a < basis.orbits().size(); ++a) {
    double e = basis.geometry().norm2(basis.orbits()[a]);
    for (int i = 0; i < m; ++i) trips.emplace_back(int(a) * m + i, int(a) * m + i, e);
  }
  diag.setFromTriplets(trips.begin(), trips.end());
  return out + diag;
}

FullSpectrum eigen_full(const MatrixFourierPotential& v, const OracleBasis& basis, double tol) {
  SparseMatrix l = assemble_L(v, basis);
  Matrix dense = Matrix(l);
  SymmetricEigen es = eigensolve_symmetric(dense, tol, &l);
  return FullSpectrum{basis, std::move(es.values), std::move(es.vectors), std::move(es.residuals), es.norm};
}

FullSpectrum eigen_full(const MatrixFourierPotential& v, double cutoff, double tol, int cap) {
  return eigen_full(v, OracleBasis(v.geometry, cutoff, v.m, cap), tol);
}

Vector embed(const Eigenpair1D& pair, const LatticeVector& beta, int axis, const OracleBasis& basis) {
  const int m = basis.m();
  if (pair.coeffs.size() % m) fail(ErrorKind::Contract, "1D coefficient length is not a multiple of m");
  if (beta.at(axis) != 0) fail(ErrorKind::Contract, "beta must be orthogonal to delta");
  const int n_trunc = static_cast<int>(pair.coeffs.size() / m) - 1;
  Vector chi = Vector::Zero(basis.size());
  LatticeVector g = beta;
  for (int n = 0; n <= n_trunc; ++n) {
    g[axis] = n;
    int a = basis.find(g);
    if (a < 0) continue;
    for (int i = 0; i < m; ++i) chi(a * m + i) = pair.coeffs(n * m + i);
  }
  return chi;
}

BindingOperators binding_operators(const MatrixFourierPotential& v, int axis, const OracleBasis& basis) {
  BindingOperators ops;
  ops.axis = axis;
  MatrixFourierPotential ray = make_zero_potential(v.geometry, v.m, v.l);
  DirectionalPotential p = directional_part(v, axis);
  for (const auto& [n, w] : p.coefficients) ray.coefficients.emplace(unit(v.dim(), axis, n), w);
  ops.separable = assemble_L(ray, basis);
  ops.coupling = potential_matrix(remainder(v, axis), basis);
  return ops;
}

Vector overlap_vector(const FullSpectrum& full, const Eigenpair1D& pair, const LatticeVector& beta, int axis) {
  Vector chi = embed(pair, beta, axis, full.basis);
  return full.vectors.transpose() * chi;
}

OverlapSet overlaps(const FullSpectrum& full, const BindingOperators& ops, const EigenpairSet& comparison, int j,
                    int slot, const LatticeVector& beta) {
  if (comparison.axis != ops.axis) fail(ErrorKind::Contract, "comparison spectrum and operators use different axes");
  if (comparison.m != full.basis.m()) fail(ErrorKind::Contract, "comparison spectrum and oracle disagree on m");
  const Eigenpair1D& pair = comparison.band(j, slot);
  OverlapSet out;
  out.j = j;
  out.slot = slot;
  out.beta = beta;
  out.lambda = pair.lambda + full.basis.geometry().norm2(beta);
  Vector chi = embed(pair, beta, ops.axis, full.basis);
  out.chi_norm2 = chi.squaredNorm();
  Vector c = full.vectors.transpose() * chi;
  Vector y = ops.coupling * chi;
  Vector rhs = full.vectors.transpose() * y;
  Vector e = ops.separable * chi - out.lambda * chi;
  out.tail = e.norm();
  const double chi_norm = std::sqrt(out.chi_norm2);
  CompensatedSum parseval;
  for (Eigen::Index n = 0; n < full.values.size(); ++n) {
    OverlapRecord r;
    r.N = static_cast<int>(n);
    r.Lambda = full.values(n);
    r.c = c(n);
    r.gap = r.Lambda - out.lambda;
    r.lhs = r.gap * r.c;
    r.rhs = rhs(n);
    r.tail = out.tail + full.residuals(n) * chi_norm;
    parseval.add(r.c * r.c);
    out.records.push_back(r);
  }
  out.parseval = parseval.value();
  return out;
}

MatchResult match(const OverlapSet& set, double M, double c_floor) {
  MatchResult best;
  double best_abs = -1;
  for (const auto& r : set.records) {
    if (!(std::abs(r.gap) < 2 * M)) continue;
    if (std::abs(r.c) > best_abs) {
      best_abs = std::abs(r.c);
      best.N = r.N;
      best.Lambda = r.Lambda;
      best.c = r.c;
      best.gap = r.gap;
    }
  }
  if (best.N < 0 || !(best_abs > c_floor))
    fail(ErrorKind::NoMatch, "no eigenvalue within 2M with |c| > " + format_double(c_floor) + " for j=" +
                                 std::to_string(set.j) + " slot=" + std::to_string(set.slot) + " beta=" +
                                 to_string(set.beta) + " (best |c| = " + format_double(best_abs) + ")");
  for (const auto& r : set.records)
    if (r.N != best.N && std::abs(r.Lambda - best.Lambda) <= 1e-9) best.degenerate.push_back(r.N);
  return best;
}

std::string overlaps_to_csv(const OverlapSet& set) {
  std::ostringstream os;
  os << "N,Lambda,gap,c,binding_residual,tail\n";
  for (const auto& r : set.records)
    os << r.N << ',' << format_double(r.Lambda) << ',' << format_double(r.gap) << ',' << format_double(r.c) << ','
       << format_double(r.binding_residual()) << ',' << format_double(r.tail) << '\n';
  return os.str();
}

std::string full_spectrum_to_csv(const FullSpectrum& full) {
  std::ostringstream os;
  os << "N,Lambda,residual\n";
  for (Eigen::Index n = 0; n < full.values.size(); ++n)
    os << n << ',' << format_double(full.values(n)) << ',' << format_double(full.residuals(n)) << '\n';
  return os.str();
}

}  // namespace spectra
