#include "spectra/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "spectra/errors.hpp"
#include "spectra/numeric.hpp"

namespace spectra {

std::string to_string(const State& s) {
  return "(j=" + std::to_string(s.j) + ", slot=" + std::to_string(s.slot) + ", beta=" + to_string(s.beta) + ")";
}

namespace {

// prod over c != axis of cos_triple(g_c, a_c, b_c)
double transverse_factor(const LatticeVector& g, const LatticeVector& a, const LatticeVector& b, int axis) {
  double f = 1;
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (static_cast<int>(c) == axis) continue;
    f *= cosine_triple(g[c], a[c], b[c]);
    if (f == 0) return 0;
  }
  return f;
}

// Targets b with transverse_factor(g, a, b) != 0.
void transverse_targets(const LatticeVector& g, const LatticeVector& a, int axis,
                        const std::function<void(const LatticeVector&, double)>& visit) {
  const std::size_t d = a.size();
  LatticeVector t(d, 0);
  std::function<void(std::size_t, double)> rec = [&](std::size_t c, double f) {
    if (c == d) {
      visit(t, f);
      return;
    }
    if (static_cast<int>(c) == axis) {
      t[c] = 0;
      rec(c + 1, f);
      return;
    }
    int x1 = a[c] + g[c], x2 = std::abs(a[c] - g[c]);
    for (int x : {x1, x2}) {
      double fc = cosine_triple(g[c], a[c], x);
      if (fc == 0) continue;
      t[c] = x;
      rec(c + 1, f * fc);
      if (x1 == x2) break;
    }
  };
  rec(0, 1.0);
}

}  // namespace

ExpansionContext::ExpansionContext(const BoxGeometry& geometry, const AsymptoticParams& params,
                                   const CouplingTable& table, const EigenpairSet& spectra, ExpansionOptions options)
    : geometry_(geometry), params_(params), table_(table), spectra_(spectra), options_(options) {
  if (table.axis != spectra.axis) fail(ErrorKind::Contract, "coupling table and spectra use different axes");
  if (spectra.max_band < 0) fail(ErrorKind::Contract, "spectra are not labeled");
  if (options_.k_max < 1 || options_.k_max > 2 * params.p)
    fail(ErrorKind::Parameter, "k_max must lie in [1, 2p]");
  delta_ = std::sqrt(spectra.delta_norm2);
  const int m = spectra.m;
  const int rows = m * (spectra.n_trunc + 1);
  const int cols = m * (spectra.max_band + 1);
  phi_ = Matrix::Zero(rows, cols);
  for (const auto& e : spectra.pairs) phi_.col(state1d(e.j, e.slot)) = e.coeffs;

  if (options_.gap_floor > 0) {
    gap_floor_ = options_.gap_floor;
  } else {
    gap_floor_ = INFINITY;
    for (std::size_t a = 0; a < spectra.pairs.size(); ++a)
      for (std::size_t b = a + 1; b < spectra.pairs.size(); ++b)
        gap_floor_ = std::min(gap_floor_, std::abs(spectra.pairs[a].lambda - spectra.pairs[b].lambda));
  }
  double wmax = 0;
  for (const auto& e : table.entries) wmax = std::max(wmax, (e.d * double(e.multiplicity)).norm());
  prune_abs_ = options_.prune * wmax;

  // the first-step window must be covered by labeled bands
  double r1 = r(1);
  if (static_cast<int>(std::ceil(7 * r1)) > spectra.max_band + 1 && options_.radius_override <= 0)
    fail(ErrorKind::Coverage, "labeled bands stop at " + std::to_string(spectra.max_band) + ", need 7 r_1 = " +
                                  format_double(7 * r1));
}

double ExpansionContext::r(int i) const {
  if (options_.radius_override > 0) return options_.radius_override;
  return params_.r(i, spectra_.delta_norm2);
}

double ExpansionContext::lambda(const State& s) const { return pair(s).lambda + geometry_.norm2(s.beta); }

bool ExpansionContext::in_Q(const State& s, const State& t, double r) const {
  if (!spectra_.has_band(t.j) || t.slot < 0 || t.slot >= spectra_.m) return false;
  LatticeVector b1(t.beta.size());
  for (std::size_t c = 0; c < b1.size(); ++c) b1[c] = t.beta[c] - s.beta[c];
  double nb = geometry_.norm(b1);
  if (!(nb > 0 && nb < params_.rho_alpha())) return false;
  return std::abs(t.j - s.j) * delta_ < 6 * r;
}

int ExpansionContext::n_window(double r) const {
  int w = static_cast<int>(std::ceil(2 * r));  // n = 0..w-1 satisfy n < 2r
  return std::min(w, spectra_.n_trunc + 1);
}

double ExpansionContext::a_coefficient(const State& s, const State& t, double r) const {
  if (!in_Q(s, t, r)) return 0.0;
  const int m = spectra_.m;
  const int nw = n_window(r);
  const Eigenpair1D& ps = pair(s);
  const Eigenpair1D& pt = pair(t);
  CompensatedSum sum;
  for (const auto& e : table_.entries) {
    double tf = transverse_factor(e.beta1, s.beta, t.beta, axis());
    if (tf == 0) continue;
    Matrix w = e.d * double(e.multiplicity);
    for (int n = 0; n < nw; ++n) {
      int a = n + e.n1, b = std::abs(n - e.n1);
      for (int n2 : {a, b}) {
        if (n2 > spectra_.n_trunc) continue;
        double f = cosine_triple(e.n1, n, n2);
        if (f != 0) {
          for (int i = 0; i < m; ++i)
            for (int k = 0; k < m; ++k) sum.add(tf * f * w(i, k) * ps.coeff(n, k, m) * pt.coeff(n2, i, m));
        }
        if (a == b) break;
      }
    }
  }
  return sum.value();
}

const Matrix& ExpansionContext::factor(std::size_t entry, int nw) const {
  auto key = std::make_pair(entry, nw);
  auto it = factors_.find(key);
  if (it != factors_.end()) return it->second;
  const CouplingEntry& e = table_.entries[entry];
  const int m = spectra_.m;
  const int nt = spectra_.n_trunc;
  Matrix w = e.d * double(e.multiplicity);
  // M[(n2,i),(n,k)] = t1(n1, n, n2) W_ik
  Matrix M = Matrix::Zero(m * (nt + 1), m * (nt + 1));
  for (int n = 0; n <= nt; ++n) {
    int a = n + e.n1, b = std::abs(n - e.n1);
    for (int n2 : {a, b}) {
      if (n2 <= nt) {
        double f = cosine_triple(e.n1, n, n2);
        if (f != 0) M.block(n2 * m, n * m, m, m) += f * w;
      }
      if (a == b) break;
    }
  }
  Matrix phi_w = phi_;
  if (nw * m < phi_w.rows()) phi_w.bottomRows(phi_w.rows() - nw * m).setZero();
  // F[s, t] = sum phi_t[(n2,i)] M[(n2,i),(n,k)] phi_s[(n,k)] with n < 2r
  Matrix F = (phi_.transpose() * M * phi_w).transpose();
  return factors_.emplace(key, std::move(F)).first->second;
}

const std::vector<std::pair<State, double>>& ExpansionContext::neighbors(const State& s, double r) const {
  const int nw = n_window(r);
  int jwin = static_cast<int>(std::ceil(6 * r / delta_)) - 1;  // |j1| delta < 6r
  jwin = std::min(jwin, spectra_.max_band);
  auto key = std::make_pair(s, nw * 100003 + jwin);
  auto it = neighbors_.find(key);
  if (it != neighbors_.end()) return it->second;

  std::map<State, double> acc;
  const int m = spectra_.m;
  const int src = state1d(s.j, s.slot);
  const int jlo = std::max(0, s.j - jwin), jhi = std::min(spectra_.max_band, s.j + jwin);
  for (std::size_t idx = 0; idx < table_.entries.size(); ++idx) {
    const CouplingEntry& e = table_.entries[idx];
    transverse_targets(e.beta1, s.beta, axis(), [&](const LatticeVector& beta2, double tf) {
      State probe{s.j, s.slot, beta2};
      LatticeVector b1(beta2.size());
      for (std::size_t c = 0; c < b1.size(); ++c) b1[c] = beta2[c] - s.beta[c];
      double nb = geometry_.norm(b1);
      if (!(nb > 0 && nb < params_.rho_alpha())) return;
      const Matrix& F = factor(idx, nw);
      for (int j2 = jlo; j2 <= jhi; ++j2)
        for (int k = 0; k < m; ++k) acc[State{j2, k, beta2}] += tf * F(src, state1d(j2, k));
    });
  }
  std::vector<std::pair<State, double>> out;
  for (auto& [t, a] : acc)
    if (std::abs(a) > prune_abs_ && in_Q(s, t, r)) out.emplace_back(t, a);
  return neighbors_.emplace(key, std::move(out)).first->second;
}

double ExpansionContext::a_fast(const State& s, const State& t, double r) const {
  const auto& nb = neighbors(s, r);
  auto it = std::lower_bound(nb.begin(), nb.end(), t,
                             [](const std::pair<State, double>& p, const State& x) { return p.first < x; });
  return it != nb.end() && it->first == t ? it->second : 0.0;
}

double ExpansionContext::a_sum(const State& s) const {
  CompensatedSum sum;
  for (const auto& [t, a] : neighbors(s, r(1))) sum.add(std::abs(a));
  return sum.value();
}

double ExpansionContext::guard_floor(const State& ref, const State& t) const {
  if (t.beta != ref.beta) return options_.guard_factor * params_.rho_pow(params_.a(2));
  return options_.guard_factor * gap_floor_;
}

PathSums ExpansionContext::path_sums(const State& ref, double Lambda, int k_max) const {
  PathSums out;
  std::map<State, double> w{{ref, 1.0}};
  std::map<State, std::uint64_t> count{{ref, 1}};
  for (int i = 1; i <= k_max; ++i) {
    std::map<State, CompensatedSum> next;
    std::map<State, std::uint64_t> cnext;
    const double ri = r(i);
    for (const auto& [s, ws] : w)
      for (const auto& [t, a] : neighbors(s, ri)) {
        if (t == ref) continue;
        next[t].add(ws * a);
        cnext[t] += count[s];
      }
    w.clear();
    for (auto& [t, acc] : next) {
      double den = Lambda - lambda(t);
      double floor = guard_floor(ref, t);
      out.min_denominator = std::min(out.min_denominator, std::abs(den));
      if (!(std::abs(den) > floor)) {
        out.violations.push_back({t, den, floor});
        if (options_.strict_guards)
          fail(ErrorKind::SmallDenominator, "|Lambda - lambda| = " + format_double(std::abs(den)) + " <= " +
                                                format_double(floor) + " at " + to_string(t) + " (step " +
                                                std::to_string(i) + ", reference " + to_string(ref) + ")");
      }
      w[t] = acc.value() / den;
    }
    count = std::move(cnext);
    const double rclose = r(i + 1);
    std::vector<double> terms;
    std::uint64_t paths = 0;
    for (const auto& [t, wt] : w) {
      double a = a_fast(t, ref, rclose);
      if (a == 0) continue;
      terms.push_back(wt * a);
      paths += count[t];
    }
    out.S.push_back(sum_descending(terms));
    out.paths.push_back(paths);
  }
  return out;
}

std::vector<double> ExpansionContext::path_sums_dfs(const State& ref, double Lambda, int k_max) const {
  // candidate targets: every labeled (j', slot') in the j-window, every beta'
  // with 0 < |beta' - beta| < rho^alpha, all amplitudes from a_coefficient.
  const int d = geometry_.dim();
  std::vector<LatticeVector> shifts;
  for (const auto& b : build_lattice(geometry_, params_.rho_alpha()))
    if (b[axis()] == 0 && geometry_.norm2(b) > 0) shifts.push_back(b);
  auto candidates = [&](const State& s, double r) {
    std::vector<std::pair<State, double>> out;
    int jwin = static_cast<int>(std::ceil(6 * r / delta_)) - 1;
    for (const auto& b : shifts) {
      LatticeVector beta2 = s.beta;
      bool ok = true;
      for (int c = 0; c < d; ++c) {
        beta2[c] += b[c];
        if (beta2[c] < 0) ok = false;
      }
      if (!ok) continue;
      for (int j2 = std::max(0, s.j - jwin); j2 <= std::min(spectra_.max_band, s.j + jwin); ++j2)
        for (int k = 0; k < spectra_.m; ++k) {
          State t{j2, k, beta2};
          double a = a_coefficient(s, t, r);
          if (std::abs(a) > prune_abs_) out.emplace_back(t, a);
        }
    }
    return out;
  };
  std::vector<std::vector<double>> terms(k_max);
  std::function<void(const State&, int, double)> dfs = [&](const State& s, int depth, double weight) {
    // weight includes factors for steps 1..depth
    if (depth >= 1) {
      double a = a_coefficient(s, ref, r(depth + 1));
      if (std::abs(a) > prune_abs_) terms[depth - 1].push_back(weight * a);
    }
    if (depth == k_max) return;
    for (const auto& [t, a] : candidates(s, r(depth + 1))) {
      if (t == ref) continue;
      dfs(t, depth + 1, weight * a / (Lambda - lambda(t)));
    }
  };
  dfs(ref, 0, 1.0);
  std::vector<double> out;
  for (auto& t : terms) out.push_back(sum_descending(t));
  return out;
}

double ExpansionContext::residual_sum(const State& ref, double Lambda, int k,
                                      const std::function<double(const State&)>& c) const {
  std::map<State, double> w{{ref, 1.0}};
  for (int i = 1; i <= k; ++i) {
    std::map<State, CompensatedSum> next;
    for (const auto& [s, ws] : w)
      for (const auto& [t, a] : neighbors(s, r(i))) {
        if (t == ref) continue;
        next[t].add(ws * a);
      }
    w.clear();
    for (auto& [t, acc] : next) w[t] = acc.value() / (Lambda - lambda(t));
  }
  std::vector<double> terms;
  for (const auto& [s, ws] : w)
    for (const auto& [u, a] : neighbors(s, r(k + 1))) {
      if (u == ref) continue;
      terms.push_back(ws * a * c(u));
    }
  return sum_descending(terms);
}

std::vector<std::map<State, double>> ExpansionContext::h_functions(const State& ref, int i_max) const {
  std::vector<std::map<State, CompensatedSum>> acc(i_max);
  const double lam = lambda(ref);
  for (const auto& [s1, a1] : neighbors(ref, r(1))) {
    double den = lam - lambda(s1);
    for (const auto& [s2, a2] : neighbors(s1, r(2))) {
      double x = a1 * a2;
      for (int i = 0; i < i_max; ++i) {
        x /= den;
        acc[i][s2].add(x);
      }
    }
  }
  std::vector<std::map<State, double>> out(i_max);
  for (int i = 0; i < i_max; ++i)
    for (auto& [s, v] : acc[i]) out[i][s] = v.value();
  return out;
}

ExpansionState e_iterate(const ExpansionContext& ctx, const State& base, int s_max) {
  if (s_max < 1) fail(ErrorKind::Parameter, "s_max must be >= 1");
  const AsymptoticParams& p = ctx.params();
  ExpansionState st;
  st.base = base;
  st.lambda_base = ctx.lambda(base);
  st.k_max = ctx.options().k_max;
  st.E.push_back(0.0);
  st.remainder_estimates.push_back(p.rho_pow(-p.a(2)));
  for (int s = 1; s <= s_max; ++s) {
    PathSums ps = ctx.path_sums(base, st.lambda_base + st.E[s - 1], st.k_max);
    st.E.push_back(sum_descending(ps.S));
    st.S_terms.push_back(ps.S);
    st.remainder_estimates.push_back(p.rho_pow(-(s + 1) * p.a(2)));
    st.min_denominator = std::min(st.min_denominator, ps.min_denominator);
    st.paths_enumerated = 0;
    for (auto n : ps.paths) st.paths_enumerated += n;
    st.violations.insert(st.violations.end(), ps.violations.begin(), ps.violations.end());
  }
  return st;
}

Prediction predict(const ExpansionState& state, int s, const AsymptoticParams& params, double budget_constant) {
  if (s < 1 || s > static_cast<int>(state.E.size()))
    fail(ErrorKind::Parameter, "prediction order " + std::to_string(s) + " not available");
  return Prediction{state.lambda_base + state.E[s - 1], budget_constant * params.rho_pow(-s * params.a(2))};
}

}  // namespace spectra
