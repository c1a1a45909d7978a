#include "spectra/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "spectra/numeric.hpp"

namespace spectra {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(Mode m) {
  switch (m) {
    case Mode::Classify: return "classify";
    case Mode::Solve1D: return "solve1d";
    case Mode::SolveFull: return "solvefull";
    case Mode::Predict: return "predict";
    case Mode::Compare: return "compare";
    case Mode::Measure: return "measure";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  for (Mode m : {Mode::Classify, Mode::Solve1D, Mode::SolveFull, Mode::Predict, Mode::Compare, Mode::Measure})
    if (s == to_string(m)) return m;
  fail(ErrorKind::Config, "unknown mode '" + s + "'");
}

// ---------------------------------------------------------------- config

namespace {

// Reads obj[key] into out if present; every key of obj must be consumed.
class Reader {
 public:
  Reader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj.is_object()) fail(ErrorKind::Config, where_ + " must be an object");
  }
  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      fail(ErrorKind::Config, where_ + "." + key + ": " + e.what());
    }
  }
  const json* sub(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }
  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) fail(ErrorKind::Config, "unknown key " + where_ + "." + it.key());
  }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

double parse_edge(const json& e) {
  if (e.is_number()) return e.get<double>();
  if (e.is_string()) {
    std::string s = e.get<std::string>();
    if (s == "pi") return M_PI;
    if (s.size() > 3 && s.compare(s.size() - 3, 3, "*pi") == 0) {
      try {
        std::size_t used = 0;
        std::string head = s.substr(0, s.size() - 3);
        double f = std::stod(head, &used);
        if (used == head.size()) return f * M_PI;
      } catch (const std::exception&) {
      }
    }
  }
  fail(ErrorKind::Config, "geometry.edges entries must be numbers, \"pi\" or \"<x>*pi\"");
}

std::string rho_tag(double rho) { return "rho" + format_double(rho); }

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  Reader top(doc, "config");
  std::string mode = to_string(c.mode);
  top.get("mode", mode);
  c.mode = parse_mode(mode);
  top.get("output", c.output);

  if (const json* g = top.sub("geometry")) {
    Reader r(*g, "geometry");
    if (const json* e = r.sub("edges")) {
      if (!e->is_array()) fail(ErrorKind::Config, "geometry.edges must be an array");
      c.edges.clear();
      for (const auto& x : *e) c.edges.push_back(parse_edge(x));
    }
    r.finish();
  }
  if (const json* p = top.sub("potential")) {
    Reader r(*p, "potential");
    r.get("file", c.potential_file);
    if (const json* gen = r.sub("generator")) {
      Reader q(*gen, "potential.generator");
      q.get("seed", c.generator.seed);
      q.get("m", c.generator.m);
      q.get("l", c.generator.l);
      q.get("amplitude", c.generator.amplitude);
      q.get("support_radius", c.generator.support_radius);
      q.finish();
    }
    r.finish();
    if (!c.potential_file.empty() && fs::path(c.potential_file).is_relative())
      c.potential_file = (fs::path(base_dir) / c.potential_file).lexically_normal().string();
  }
  if (const json* p = top.sub("params")) {
    Reader r(*p, "params");
    r.get("rho", c.rho);
    r.get("alpha", c.alpha);
    r.get("k_max", c.k_max);
    r.get("order", c.order);
    if (const json* s = r.sub("shell")) {
      Reader q(*s, "params.shell");
      q.get("c1", c.shell.c1);
      q.get("c2", c.shell.c2);
      q.finish();
    }
    r.finish();
  }
  if (const json* p = top.sub("sturm1d")) {
    Reader r(*p, "sturm1d");
    r.get("n_trunc", c.n_trunc);
    r.get("tol", c.tol_1d);
    r.finish();
  }
  if (const json* p = top.sub("oracle")) {
    Reader r(*p, "oracle");
    r.get("cutoff", c.oracle_cutoff);
    r.get("cap", c.oracle_cap);
    r.get("margin", c.oracle_margin);
    r.get("tol", c.tol_oracle);
    r.get("binding_tol", c.binding_tol);
    r.get("parseval_tol", c.parseval_tol);
    r.finish();
  }
  if (const json* p = top.sub("guards")) {
    Reader r(*p, "guards");
    r.get("factor", c.guard_factor);
    r.get("gap_floor", c.gap_floor);
    r.get("strict", c.strict_guards);
    r.get("prune", c.prune);
    r.get("budget_constant", c.budget_constant);
    r.finish();
  }
  if (const json* p = top.sub("measure")) {
    Reader r(*p, "measure");
    r.get("samples", c.mc_samples);
    r.get("seed", c.mc_seed);
    r.get("axis", c.mc_axis);
    r.finish();
  }
  top.finish();
  if (fs::path(c.output).is_relative()) c.output = (fs::path(base_dir) / c.output).lexically_normal().string();
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Config, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fs::path(path).parent_path().string().empty() ? "." : fs::path(path).parent_path().string());
}

namespace {

json config_json(const RunConfig& c) {
  json pot = json::object();
  if (c.potential_file.empty())
    pot["generator"] = {{"seed", c.generator.seed},
                        {"m", c.generator.m},
                        {"l", c.generator.l},
                        {"amplitude", c.generator.amplitude},
                        {"support_radius", c.generator.support_radius}};
  else
    pot["file"] = c.potential_file;
  return {{"mode", to_string(c.mode)},
          {"output", c.output},
          {"geometry", {{"edges", c.edges}}},
          {"potential", pot},
          {"params",
           {{"rho", c.rho},
            {"alpha", c.alpha},
            {"k_max", c.k_max},
            {"order", c.order},
            {"shell", {{"c1", c.shell.c1}, {"c2", c.shell.c2}}}}},
          {"sturm1d", {{"n_trunc", c.n_trunc}, {"tol", c.tol_1d}}},
          {"oracle",
           {{"cutoff", c.oracle_cutoff},
            {"cap", c.oracle_cap},
            {"margin", c.oracle_margin},
            {"tol", c.tol_oracle},
            {"binding_tol", c.binding_tol},
            {"parseval_tol", c.parseval_tol}}},
          {"guards",
           {{"factor", c.guard_factor},
            {"gap_floor", c.gap_floor},
            {"strict", c.strict_guards},
            {"prune", c.prune},
            {"budget_constant", c.budget_constant}}},
          {"measure", {{"samples", c.mc_samples}, {"seed", c.mc_seed}, {"axis", c.mc_axis}}}};
}

}  // namespace

std::string config_to_json(const RunConfig& c) { return config_json(c).dump(2) + "\n"; }

void validate(const RunConfig& c) {
  auto bad = [](const std::string& m) { fail(ErrorKind::Config, m); };
  if (c.edges.empty()) bad("geometry.edges is empty");
  for (double e : c.edges)
    if (!(e > 0) || !std::isfinite(e)) bad("geometry.edges must be positive");
  if (c.rho.empty()) bad("params.rho is empty");
  for (std::size_t i = 0; i < c.rho.size(); ++i) {
    if (!(c.rho[i] > 1)) bad("params.rho values must exceed 1");
    if (i && !(c.rho[i] > c.rho[i - 1])) bad("params.rho must be strictly ascending");
  }
  if (!c.potential_file.empty() && !fs::exists(c.potential_file)) bad("potential file " + c.potential_file + " does not exist");
  if (c.generator.m < 1) bad("potential.generator.m must be >= 1");
  if (!(c.generator.support_radius >= 0)) bad("potential.generator.support_radius must be >= 0");
  if (!(c.shell.c1 > 0 && c.shell.c2 > c.shell.c1)) bad("params.shell needs 0 < c1 < c2");
  if (c.k_max < 1) bad("params.k_max must be >= 1");
  if (c.order < 1) bad("params.order must be >= 1");
  if (c.n_trunc < 1) bad("sturm1d.n_trunc must be >= 1");
  for (auto [v, name] : {std::pair{c.tol_1d, "sturm1d.tol"}, {c.tol_oracle, "oracle.tol"},
                         {c.binding_tol, "oracle.binding_tol"}, {c.parseval_tol, "oracle.parseval_tol"},
                         {c.guard_factor, "guards.factor"}, {c.budget_constant, "guards.budget_constant"}})
    if (!(v > 0)) bad(std::string(name) + " must be positive");
  if (!(c.prune >= 0)) bad("guards.prune must be >= 0");
  if (c.oracle_cap < 1) bad("oracle.cap must be >= 1");
  if (!(c.oracle_margin >= 0)) bad("oracle.margin must be >= 0");
  if (c.mc_samples < 1) bad("measure.samples must be >= 1");
  if (c.mc_axis < 0 || c.mc_axis >= static_cast<int>(c.edges.size())) bad("measure.axis outside the dimension");
  if (c.output.empty()) bad("output directory is empty");
}

MatrixFourierPotential make_potential(const RunConfig& c) {
  BoxGeometry geo(c.edges);
  if (c.potential_file.empty()) return generate_random_potential(c.generator, geo);
  MatrixFourierPotential v = load_potential(c.potential_file);
  if (v.geometry.edges() != c.edges) fail(ErrorKind::Config, "potential file geometry differs from config geometry");
  v.validate();
  return v;
}

AsymptoticParams make_params(const RunConfig& c, const MatrixFourierPotential& v, double rho) {
  return AsymptoticParams::make(rho, c.alpha, v.dim(), v.l);
}

// ---------------------------------------------------------------- classification

std::vector<ClassifiedPoint> classify_shell(const BoxGeometry& g, const AsymptoticParams& params, const Shell& shell) {
  WitnessTable table(g, params);
  std::vector<ClassifiedPoint> out;
  for (auto& gamma : build_lattice(g, shell.c2 * params.rho)) {
    if (!shell.contains(g.norm(gamma), params.rho)) continue;
    DomainClass cls = classify(gamma, table, shell);
    out.push_back({std::move(gamma), std::move(cls)});
  }
  return out;
}

std::vector<ClassifiedPoint> single_resonance_points(const BoxGeometry& g, const AsymptoticParams& params,
                                                     const Shell& shell, double limit) {
  std::vector<ClassifiedPoint> out;
  for (auto& p : classify_shell(g, params, shell)) {
    if (p.cls.tag != DomainTag::SingleResonance) continue;
    if (std::any_of(p.gamma.begin(), p.gamma.end(), [](int x) { return x < 0; })) continue;
    if (!(g.norm(p.gamma) < limit)) continue;
    out.push_back(std::move(p));
  }
  return out;
}

double oracle_cutoff(const RunConfig& c, const BoxGeometry& g, int m, double rho) {
  if (c.oracle_cutoff > 0) return c.oracle_cutoff;
  double want = c.shell.c2 * rho + c.oracle_margin;
  std::size_t keep = static_cast<std::size_t>(c.oracle_cap / m);
  std::vector<double> norms;
  for (const auto& o : build_orbits(g, want)) norms.push_back(g.norm(o));
  if (norms.size() <= keep) return want;
  std::sort(norms.begin(), norms.end());
  // |g| < norms[keep] admits at most `keep` orbits, up to rounding of the sqrt
  double cut = norms[keep];
  while (build_orbits(g, cut).size() > keep) cut = std::nextafter(cut, 0.0);
  return cut;
}

// ---------------------------------------------------------------- prediction and comparison

namespace {

struct AxisData {
  DirectionalPotential P;
  EigenpairSet spectra;
  CouplingTable table;
  std::unique_ptr<ExpansionContext> ctx;
  std::unique_ptr<BindingOperators> ops;
};

std::string context(double rho, const LatticeVector& gamma) {
  return "rho=" + format_double(rho) + " gamma=" + to_string(gamma);
}

[[noreturn]] void rethrow_with(const Error& e, const std::string& where) {
  std::string what = e.what();
  std::string prefix = std::string(to_string(e.kind())) + ": ";
  if (what.rfind(prefix, 0) == 0) what = what.substr(prefix.size());
  throw Error(e.kind(), where + ": " + what);
}

class Pipeline {
 public:
  Pipeline(const RunConfig& c, const MatrixFourierPotential& v, double rho)
      : c_(c), v_(v), params_(make_params(c, v, rho)), axes_(v.dim()) {}

  const AsymptoticParams& params() const { return params_; }

  AxisData& axis(int k, const OracleBasis* basis = nullptr) {
    AxisData& a = axes_[k];
    if (!a.ctx) {
      a.P = directional_part(v_, k);
      a.spectra = solve_directional(a.P, c_.n_trunc, c_.tol_1d);
      a.table = coupling_table(v_, k, params_);
      ExpansionOptions opt;
      opt.k_max = c_.k_max;
      opt.prune = c_.prune;
      opt.gap_floor = c_.gap_floor;
      opt.guard_factor = c_.guard_factor;
      opt.strict_guards = c_.strict_guards;
      a.ctx = std::make_unique<ExpansionContext>(v_.geometry, params_, a.table, a.spectra, opt);
    }
    if (basis && !a.ops) a.ops = std::make_unique<BindingOperators>(binding_operators(v_, k, *basis));
    return a;
  }

  // Prediction half of a row for one slot of a classified point.
  CompareRow predict_row(const ClassifiedPoint& p, int slot) {
    CompareRow row;
    row.rho = params_.rho;
    row.gamma = p.gamma;
    row.axis = p.cls.axis;
    row.state = State{std::abs(p.cls.j), slot, orbit_representative(p.cls.beta)};
    AxisData& a = axis(row.axis);
    const int s_max = std::max(1, c_.order - 1);
    ExpansionState st = e_iterate(*a.ctx, row.state, s_max);
    row.lambda = st.lambda_base;
    row.E.assign(st.E.begin(), st.E.begin() + c_.order);
    row.S_terms.assign(st.S_terms.begin(), st.S_terms.begin() + std::max(0, c_.order - 1));
    for (int s = 1; s <= c_.order; ++s) {
      Prediction pr = predict(st, s, params_, c_.budget_constant);
      row.Lambda_pred.push_back(pr.Lambda);
      row.budget.push_back(pr.budget);
    }
    row.min_denominator = st.min_denominator;
    row.paths = st.paths_enumerated;
    row.violations = st.violations.size();
    row.a_sum = a.ctx->a_sum(row.state);
    return row;
  }

 private:
  const RunConfig& c_;
  const MatrixFourierPotential& v_;
  AsymptoticParams params_;
  std::vector<AxisData> axes_;
};

// Selection check against the h functions: |c(N)|^2 > |<psi_N, h_i/||h_i||>|^2 / (2 p2) for every i
// with h_i != 0.
void selection_check(CompareRow& row, const ExpansionContext& ctx, const FullSpectrum& full, int p2) {
  auto h = ctx.h_functions(row.state, p2);
  std::set<State> support;
  for (const auto& hi : h)
    for (const auto& [s, x] : hi) support.insert(s);
  const auto psi = full.vectors.col(row.matched_N);
  std::map<State, double> cN;
  for (const auto& s : support) cN[s] = psi.dot(embed(ctx.pair(s), s.beta, ctx.axis(), full.basis));
  for (const auto& hi : h) {
    CompensatedSum n2, proj;
    for (const auto& [s, x] : hi) {
      n2.add(x * x);
      proj.add(x * cN[s]);
    }
    double norm = std::sqrt(n2.value());
    row.h_norms.push_back(norm);
    if (norm == 0) continue;
    double pr = proj.value() / norm;
    if (!(row.c * row.c > pr * pr / (2.0 * p2))) row.selection_ok = false;
  }
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  double pos = q * (v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

}  // namespace

std::vector<CompareRow> compare_at(const RunConfig& c, const MatrixFourierPotential& v, double rho,
                                   RhoSummary* summary, std::string* overlap_csv) {
  Pipeline pipe(c, v, rho);
  const AsymptoticParams& params = pipe.params();
  const BoxGeometry& geo = v.geometry;
  const double cutoff = oracle_cutoff(c, geo, v.m, rho);
  double support = 0;
  for (const auto& [g, w] : v.coefficients) support = std::max(support, geo.norm(g));
  // coupling containment: every tested gamma keeps rho^alpha + support inside the basis
  if (!(c.oracle_margin >= params.rho_alpha() + support))
    fail(ErrorKind::Config, "oracle.margin " + format_double(c.oracle_margin) + " below rho^alpha + support = " +
                                format_double(params.rho_alpha() + support));
  auto points = single_resonance_points(geo, params, c.shell, cutoff - c.oracle_margin);
  OracleBasis basis(geo, cutoff, v.m, c.oracle_cap);
  FullSpectrum full = eigen_full(v, basis, c.tol_oracle);
  const double M = sup_norm_bound(v);
  const double c_floor = params.rho_pow(-params.q * params.alpha);
  const double noise = 16 * std::numeric_limits<double>::epsilon() * full.norm;

  std::ostringstream ov_csv;
  std::vector<CompareRow> rows;
  for (const auto& p : points) {
    try {
      for (int slot = 0; slot < v.m; ++slot) {
        CompareRow row = pipe.predict_row(p, slot);
        AxisData& a = pipe.axis(row.axis, &basis);
        OverlapSet ov = overlaps(full, *a.ops, a.spectra, row.state.j, slot, row.state.beta);
        MatchResult mr = match(ov, M, c_floor);
        row.matched_N = mr.N;
        row.Lambda_oracle = mr.Lambda;
        row.c = mr.c;
        row.degenerate = mr.degenerate.size();
        row.parseval = ov.parseval;
        row.noise = noise;
        for (const auto& r : ov.records) {
          double res = r.binding_residual();
          row.binding_worst = std::max(row.binding_worst, res - r.tail);
          if (!(res <= c.binding_tol + r.tail)) row.binding_ok = false;
          if (overlap_csv && std::abs(r.gap) < 2 * M)
            ov_csv << format_double(rho) << ",\"" << to_string(row.gamma) << "\"," << slot << ',' << r.N << ','
                   << format_double(r.Lambda) << ',' << format_double(r.gap) << ',' << format_double(r.c) << ','
                   << format_double(res) << ',' << format_double(r.tail) << '\n';
        }
        for (double pred : row.Lambda_pred) row.abs_err.push_back(std::abs(mr.Lambda - pred));
        for (std::size_t s = 1; s < row.abs_err.size(); ++s)
          if (row.abs_err[s] > row.abs_err[s - 1] && row.abs_err[s] > noise) ++row.flags;
        selection_check(row, *a.ctx, full, params.p2);
        rows.push_back(std::move(row));
      }
    } catch (const Error& e) {
      rethrow_with(e, context(rho, p.gamma));
    }
  }

  if (summary) {
    RhoSummary& s = *summary;
    s = RhoSummary{};
    s.rho = rho;
    s.cutoff = cutoff;
    s.oracle_size = basis.size();
    s.M = M;
    s.c_floor = c_floor;
    s.rows = rows.size();
    if (!rows.empty()) s.gap_floor = pipe.axis(rows.front().axis).ctx->gap_floor();
    for (const auto& r : rows) s.a_sum_max = std::max(s.a_sum_max, r.a_sum);
    for (int o = 1; o <= c.order && !rows.empty(); ++o) {
      OrderSummary os;
      os.order = o;
      std::vector<double> errs;
      for (const auto& r : rows) {
        errs.push_back(r.abs_err[o - 1]);
        if (o > 1 && r.abs_err[o - 1] > r.abs_err[o - 2] && r.abs_err[o - 1] > r.noise) ++os.flagged;
      }
      os.min = *std::min_element(errs.begin(), errs.end());
      os.max = *std::max_element(errs.begin(), errs.end());
      os.median = median(errs);
      os.q90 = quantile(errs, 0.9);
      s.orders.push_back(os);
    }
  }
  if (overlap_csv) *overlap_csv = ov_csv.str();
  return rows;
}

ComparisonReport compare(const RunConfig& c, const MatrixFourierPotential& v, std::ostream* log,
                         std::string* overlap_csv) {
  ComparisonReport rep;
  rep.k_max = c.k_max;
  rep.order = c.order;
  if (overlap_csv) *overlap_csv = "rho,gamma,slot,N,Lambda,gap,c,binding_residual,tail\n";
  for (double rho : c.rho) {
    RhoSummary s;
    std::string ov;
    auto rows = compare_at(c, v, rho, &s, overlap_csv ? &ov : nullptr);
    if (overlap_csv) *overlap_csv += ov;
    if (log)
      *log << "compare rho=" << format_double(rho) << ": " << rows.size() << " rows, oracle size " << s.oracle_size
           << '\n';
    rep.summaries.push_back(s);
    for (auto& r : rows) rep.rows.push_back(std::move(r));
  }
  if (c.rho.size() >= 3) rep.slopes = convergence_study(rep);
  return rep;
}

std::vector<SlopeRow> convergence_study(const ComparisonReport& report) {
  if (report.summaries.size() < 3) fail(ErrorKind::Parameter, "convergence study needs at least 3 rho values");
  std::map<double, double> noise;
  for (const auto& r : report.rows) noise[r.rho] = std::max(noise[r.rho], r.noise);
  std::vector<SlopeRow> out;
  for (int o = 1; o <= report.order; ++o) {
    SlopeRow row;
    row.order = o;
    std::vector<double> x, y;
    for (const auto& s : report.summaries) {
      if (static_cast<int>(s.orders.size()) < o) {
        row.degenerate = true;
        row.note = "no rows at rho=" + format_double(s.rho);
        break;
      }
      double med = s.orders[o - 1].median;
      if (!(med > noise[s.rho])) {
        row.degenerate = true;
        row.note = "degenerate: below noise floor";
        break;
      }
      x.push_back(std::log(s.rho));
      y.push_back(std::log(med));
    }
    if (!row.degenerate) {
      LinearFit f = least_squares(x, y);
      row.slope = f.slope;
      row.intercept = f.intercept;
      row.std_error = f.slope_stderr;
      row.residuals = f.residuals;
      boost::math::students_t t(static_cast<double>(x.size() - 2));
      double w = boost::math::quantile(boost::math::complement(t, 0.025)) * f.slope_stderr;
      row.ci_low = f.slope - w;
      row.ci_high = f.slope + w;
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::string comparison_csv(const ComparisonReport& r) {
  std::ostringstream os;
  os << "rho,gamma,axis,j,slot,beta,lambda";
  for (int s = 1; s <= r.order; ++s) os << ",Lambda_pred_" << s;
  os << ",matched_N,Lambda_oracle,c";
  for (int s = 1; s <= r.order; ++s) os << ",abs_err_" << s;
  os << ",flags,min_denominator,paths,violations,a_sum,parseval,binding_ok,selection_ok\n";
  for (const auto& row : r.rows) {
    os << format_double(row.rho) << ",\"" << to_string(row.gamma) << "\"," << row.axis << ',' << row.state.j << ','
       << row.state.slot << ",\"" << to_string(row.state.beta) << "\"," << format_double(row.lambda);
    for (double x : row.Lambda_pred) os << ',' << format_double(x);
    os << ',' << row.matched_N << ',' << format_double(row.Lambda_oracle) << ',' << format_double(row.c);
    for (double x : row.abs_err) os << ',' << format_double(x);
    os << ',' << row.flags << ',' << format_double(row.min_denominator) << ',' << row.paths << ',' << row.violations
       << ',' << format_double(row.a_sum) << ',' << format_double(row.parseval) << ',' << (row.binding_ok ? 1 : 0)
       << ',' << (row.selection_ok ? 1 : 0) << '\n';
  }
  return os.str();
}

namespace {

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json numbers(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

json row_json(const CompareRow& row, bool with_oracle) {
  json j = {{"rho", row.rho},
            {"gamma", row.gamma},
            {"axis", row.axis},
            {"j", row.state.j},
            {"slot", row.state.slot},
            {"beta", row.state.beta},
            {"lambda_base", row.lambda},
            {"E", numbers(row.E)},
            {"S_terms", row.S_terms},
            {"Lambda_pred", numbers(row.Lambda_pred)},
            {"error_budget", numbers(row.budget)},
            {"a_sum", row.a_sum},
            {"guards",
             {{"min_denominator", number(row.min_denominator)},
              {"paths_enumerated", row.paths},
              {"violations", row.violations}}}};
  if (with_oracle) {
    j["matched_N"] = row.matched_N;
    j["Lambda_oracle"] = number(row.Lambda_oracle);
    j["c"] = number(row.c);
    j["degenerate_candidates"] = row.degenerate;
    j["abs_err"] = numbers(row.abs_err);
    j["flags"] = row.flags;
    j["parseval"] = number(row.parseval);
    j["binding"] = {{"ok", row.binding_ok}, {"worst_excess", number(row.binding_worst)}};
    j["h_norms"] = numbers(row.h_norms);
    j["selection_ok"] = row.selection_ok;
  }
  return j;
}

}  // namespace

std::string predictions_json(const ComparisonReport& r) {
  json a = json::array();
  for (const auto& row : r.rows) a.push_back(row_json(row, true));
  return json{{"k_max", r.k_max}, {"order", r.order}, {"rows", a}}.dump(2) + "\n";
}

std::string summary_json(const ComparisonReport& r) {
  json per = json::array();
  std::size_t flags = 0, rows = 0;
  for (const auto& row : r.rows) {
    flags += row.flags ? 1 : 0;
    ++rows;
  }
  for (const auto& s : r.summaries) {
    json orders = json::array();
    for (const auto& o : s.orders)
      orders.push_back({{"order", o.order},
                        {"min", o.min},
                        {"median", o.median},
                        {"q90", o.q90},
                        {"max", o.max},
                        {"flagged", o.flagged}});
    per.push_back({{"rho", s.rho},
                   {"oracle_cutoff", s.cutoff},
                   {"oracle_size", s.oracle_size},
                   {"M", s.M},
                   {"c_floor", s.c_floor},
                   {"gap_floor", s.gap_floor},
                   {"rows", s.rows},
                   {"a_sum_max", s.a_sum_max},
                   {"orders", orders}});
  }
  json slopes = json::array();
  for (const auto& s : r.slopes)
    slopes.push_back({{"order", s.order},
                      {"slope", number(s.slope)},
                      {"intercept", number(s.intercept)},
                      {"std_error", number(s.std_error)},
                      {"ci95", {number(s.ci_low), number(s.ci_high)}},
                      {"residuals", numbers(s.residuals)},
                      {"degenerate", s.degenerate},
                      {"note", s.note}});
  return json{{"k_max", r.k_max},
              {"order", r.order},
              {"rows", rows},
              {"rows_flagged", flags},
              {"per_rho", per},
              {"slopes", slopes}}
             .dump(2) +
         "\n";
}

// ---------------------------------------------------------------- 1D reports

std::vector<WindowRow> window_rows(const EigenpairSet& set, const DirectionalPotential& p) {
  Eigen::SelfAdjointEigenSolver<Matrix> mean(p.mean(), Eigen::EigenvaluesOnly);
  std::vector<WindowRow> out;
  for (const auto& e : set.pairs) {
    WindowRow w;
    w.j = e.j;
    w.slot = e.slot;
    w.lambda = e.lambda;
    double off = e.lambda - double(e.j) * e.j * set.delta_norm2;
    w.shift = std::abs(off);
    w.mean_offset = INFINITY;
    for (Eigen::Index k = 0; k < mean.eigenvalues().size(); ++k)
      w.mean_offset = std::min(w.mean_offset, std::abs(off - mean.eigenvalues()(k)));
    w.in_window = e.in_window;
    out.push_back(w);
  }
  std::sort(out.begin(), out.end(), [](const WindowRow& a, const WindowRow& b) {
    return std::tie(a.j, a.slot) < std::tie(b.j, b.slot);
  });
  return out;
}

DecayRow decay_at(const EigenpairSet& set, const AsymptoticParams& params) {
  DecayRow row;
  row.rho = params.rho;
  row.axis = set.axis;
  row.r1 = params.r1(set.delta_norm2);
  DecayReport rep = decay_report(set, params, row.r1);
  row.offband = rep.max_offband;
  row.tail_sum = rep.max_tail_sum;
  row.threshold1 = rep.threshold1;
  row.threshold2 = rep.threshold2;
  row.tail_complete = rep.tail_complete;
  return row;
}

// ---------------------------------------------------------------- run

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::Resource, "SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return 2;
    case ErrorKind::SmallDenominator: return 3;
    case ErrorKind::NoMatch: return 4;
    default: return 1;
  }
}

namespace {

class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}
  void write(const std::string& name, const std::string& content) {
    fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) fail(ErrorKind::Resource, "cannot write " + p.string());
    out << content;
    if (!out) fail(ErrorKind::Resource, "write failed for " + p.string());
    list_.push_back({{"path", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
  }
  const json& list() const { return list_; }

 private:
  fs::path dir_;
  json list_ = json::array();
};

void run_classify(const RunConfig& c, const MatrixFourierPotential& v, Artifacts& out, std::ostream& log) {
  for (double rho : c.rho) {
    auto params = make_params(c, v, rho);
    auto pts = classify_shell(v.geometry, params, c.shell);
    std::vector<LatticeVector> gs;
    std::vector<DomainClass> cls;
    std::map<std::string, int> counts;
    for (auto& p : pts) {
      counts[to_string(p.cls.tag)]++;
      gs.push_back(std::move(p.gamma));
      cls.push_back(std::move(p.cls));
    }
    std::ostringstream os;
    write_classification_csv(os, v.geometry, gs, cls);
    out.write("classify_" + rho_tag(rho) + ".csv", os.str());
    log << "classify rho=" << format_double(rho) << ":";
    for (const auto& [k, n] : counts) log << ' ' << k << '=' << n;
    log << '\n';
  }
}

void run_solve1d(const RunConfig& c, const MatrixFourierPotential& v, Artifacts& out, std::ostream& log) {
  std::ostringstream decay;
  decay << "rho,axis,r1,offband,threshold1,tail_sum,threshold2,tail_complete\n";
  for (int k = 0; k < v.dim(); ++k) {
    DirectionalPotential p = directional_part(v, k);
    EigenpairSet set = solve_directional(p, c.n_trunc, c.tol_1d);
    out.write("spectrum_axis" + std::to_string(k) + ".json", spectrum_to_json(set));
    std::ostringstream win;
    win << "j,slot,lambda,shift,mean_offset,in_window\n";
    for (const auto& w : window_rows(set, p))
      win << w.j << ',' << w.slot << ',' << format_double(w.lambda) << ',' << format_double(w.shift) << ','
          << format_double(w.mean_offset) << ',' << (w.in_window ? 1 : 0) << '\n';
    out.write("window_axis" + std::to_string(k) + ".csv", win.str());
    for (double rho : c.rho) {
      DecayRow d = decay_at(set, make_params(c, v, rho));
      decay << format_double(rho) << ',' << k << ',' << format_double(d.r1) << ',' << format_double(d.offband) << ','
            << format_double(d.threshold1) << ',' << format_double(d.tail_sum) << ',' << format_double(d.threshold2)
            << ',' << (d.tail_complete ? 1 : 0) << '\n';
    }
    log << "solve1d axis " << k << ": " << set.pairs.size() << " labeled pairs, gram deviation "
        << format_double(gram_deviation(set)) << '\n';
  }
  out.write("decay.csv", decay.str());
}

void run_solvefull(const RunConfig& c, const MatrixFourierPotential& v, Artifacts& out, std::ostream& log) {
  for (double rho : c.rho) {
    double cutoff = oracle_cutoff(c, v.geometry, v.m, rho);
    FullSpectrum full = eigen_full(v, cutoff, c.tol_oracle, c.oracle_cap);
    out.write("full_" + rho_tag(rho) + ".csv", full_spectrum_to_csv(full));
    log << "solvefull rho=" << format_double(rho) << ": cutoff " << format_double(cutoff) << ", size "
        << full.basis.size() << ", max residual " << format_double(full.residuals.maxCoeff()) << '\n';
  }
}

void run_predict(const RunConfig& c, const MatrixFourierPotential& v, Artifacts& out, std::ostream& log) {
  for (double rho : c.rho) {
    Pipeline pipe(c, v, rho);
    json rows = json::array();
    for (const auto& p : single_resonance_points(v.geometry, pipe.params(), c.shell)) {
      try {
        for (int slot = 0; slot < v.m; ++slot) rows.push_back(row_json(pipe.predict_row(p, slot), false));
      } catch (const Error& e) {
        rethrow_with(e, context(rho, p.gamma));
      }
    }
    log << "predict rho=" << format_double(rho) << ": " << rows.size() << " rows\n";
    out.write("predict_" + rho_tag(rho) + ".json",
              json{{"rho", rho}, {"k_max", c.k_max}, {"order", c.order}, {"rows", rows}}.dump(2) + "\n");
  }
}

void run_compare(const RunConfig& c, const MatrixFourierPotential& v, Artifacts& out, std::ostream& log) {
  std::string overlaps;
  ComparisonReport rep = compare(c, v, &log, &overlaps);
  out.write("compare.csv", comparison_csv(rep));
  out.write("overlaps.csv", overlaps);
  out.write("predictions.json", predictions_json(rep));
  out.write("summary.json", summary_json(rep));
  for (const auto& s : rep.slopes)
    log << "order " << s.order << ": "
        << (s.degenerate ? s.note : "slope " + format_double(s.slope) + " +- " + format_double(s.std_error)) << '\n';
}

void run_measure(const RunConfig& c, const MatrixFourierPotential& v, Artifacts& out, std::ostream& log) {
  std::ostringstream os;
  os << "rho,axis,samples,accepted,single,ratio,std_error\n";
  for (double rho : c.rho) {
    auto params = make_params(c, v, rho);
    MeasureEstimate m = estimate_measure_ratio(v.geometry, c.mc_axis, params, c.shell, c.mc_samples, c.mc_seed);
    os << format_double(rho) << ',' << c.mc_axis << ',' << m.samples << ',' << m.accepted << ',' << m.single << ','
       << format_double(m.ratio) << ',' << format_double(m.std_error) << '\n';
    log << "measure rho=" << format_double(rho) << ": ratio " << format_double(m.ratio) << " +- "
        << format_double(m.std_error) << '\n';
  }
  out.write("measure.csv", os.str());
}

}  // namespace

int run(const RunConfig& c, std::ostream& log) {
  fs::path dir(c.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    log << "error: cannot create output directory " << dir.string() << ": " << ec.message() << '\n';
    return exit_code(ErrorKind::Config);
  }
  Artifacts out(dir);
  int code = 0;
  json error = nullptr;
  try {
    validate(c);
    MatrixFourierPotential v = make_potential(c);
    switch (c.mode) {
      case Mode::Classify: run_classify(c, v, out, log); break;
      case Mode::Solve1D: run_solve1d(c, v, out, log); break;
      case Mode::SolveFull: run_solvefull(c, v, out, log); break;
      case Mode::Predict: run_predict(c, v, out, log); break;
      case Mode::Compare: run_compare(c, v, out, log); break;
      case Mode::Measure: run_measure(c, v, out, log); break;
    }
  } catch (const Error& e) {
    code = exit_code(e.kind());
    error = {{"kind", to_string(e.kind())}, {"message", e.what()}};
    log << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    code = 1;
    error = {{"kind", "internal"}, {"message", e.what()}};
    log << "error: " << e.what() << '\n';
  }
  json manifest = {{"mode", to_string(c.mode)},
                   {"complete", code == 0},
                   {"exit_code", code},
                   {"error", error},
                   {"config", config_json(c)},
                   {"artifacts", out.list()}};
  std::ofstream mf(dir / "manifest.json", std::ios::binary);
  mf << manifest.dump(2) << '\n';
  if (!mf) {
    log << "error: cannot write manifest\n";
    return code ? code : 1;
  }
  return code;
}

}  // namespace spectra
