#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spectra/asymptotics.hpp"
#include "spectra/errors.hpp"
#include "spectra/lattice.hpp"
#include "spectra/potential.hpp"
#include "spectra/refsolver.hpp"
#include "spectra/sturm1d.hpp"

namespace spectra {

enum class Mode { Classify, Solve1D, SolveFull, Predict, Compare, Measure };
const char* to_string(Mode m);
Mode parse_mode(const std::string& s);

struct RunConfig {
  Mode mode = Mode::Compare;
  std::vector<double> edges{M_PI, M_PI};

  std::string potential_file;  // empty: use the generator
  GeneratorSpec generator;

  std::vector<double> rho{10, 20, 40};
  double alpha = 0.04;
  Shell shell;
  int k_max = 4;
  int order = 3;  // highest prediction order s; E is iterated to s - 1

  int n_trunc = 64;
  double tol_1d = 1e-12;

  double oracle_cutoff = 0;  // <= 0: largest cutoff within oracle_cap, at most c2 rho + margin
  int oracle_cap = 4000;
  double oracle_margin = 4;
  double tol_oracle = 1e-12;
  double binding_tol = 1e-6;
  double parseval_tol = 1e-6;

  double guard_factor = 0.5;
  double gap_floor = 0;
  bool strict_guards = false;
  double prune = 1e-13;
  double budget_constant = 1.0;

  std::uint64_t mc_samples = 100000;
  std::uint64_t mc_seed = 7;
  int mc_axis = 0;

  std::string output = "out";
};

// Parses a JSON document; relative paths resolve against base_dir. Throws
// Config on malformed input or failed invariants.
RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);
// Every field, defaults included.
std::string config_to_json(const RunConfig& c);
void validate(const RunConfig& c);

MatrixFourierPotential make_potential(const RunConfig& c);
AsymptoticParams make_params(const RunConfig& c, const MatrixFourierPotential& v, double rho);

struct ClassifiedPoint {
  LatticeVector gamma;
  DomainClass cls;
};
// Every lattice point of the shell, lexicographic.
std::vector<ClassifiedPoint> classify_shell(const BoxGeometry& g, const AsymptoticParams& params, const Shell& shell);
// Single-resonance points with nonnegative components and |gamma| < limit.
std::vector<ClassifiedPoint> single_resonance_points(const BoxGeometry& g, const AsymptoticParams& params,
                                                     const Shell& shell, double limit = INFINITY);

double oracle_cutoff(const RunConfig& c, const BoxGeometry& g, int m, double rho);

struct CompareRow {
  double rho = 0;
  LatticeVector gamma;
  int axis = 0;
  State state;
  double lambda = 0;
  std::vector<double> E;            // E_0 .. E_{order-1}
  std::vector<std::vector<double>> S_terms;
  std::vector<double> Lambda_pred;  // orders 1..order
  std::vector<double> budget;
  int matched_N = -1;
  double Lambda_oracle = NAN;
  double c = NAN;
  std::size_t degenerate = 0;
  std::vector<double> abs_err;      // orders 1..order
  std::size_t flags = 0;            // orders whose error exceeds the previous one
  double min_denominator = INFINITY;
  std::uint64_t paths = 0;
  std::size_t violations = 0;
  double a_sum = 0;
  double parseval = NAN;
  double binding_worst = 0;         // max over records of |lhs - rhs| - tail
  bool binding_ok = true;
  std::vector<double> h_norms;      // ||h_i||, i = 1..p2
  bool selection_ok = true;
  double noise = 0;                 // rounding floor of the oracle eigenvalue
};

struct OrderSummary {
  int order = 0;
  double min = 0, median = 0, q90 = 0, max = 0;
  std::size_t flagged = 0;  // rows whose error grew from order - 1
};

struct RhoSummary {
  double rho = 0;
  double cutoff = 0;
  int oracle_size = 0;
  double M = 0;
  double c_floor = 0;
  double gap_floor = 0;
  std::size_t rows = 0;
  std::vector<OrderSummary> orders;
  double a_sum_max = 0;
};

struct SlopeRow {
  int order = 0;
  double slope = NAN;
  double intercept = NAN;
  double std_error = NAN;
  double ci_low = NAN, ci_high = NAN;  // 95%
  std::vector<double> residuals;
  bool degenerate = false;  // some median below the noise floor
  std::string note;
};

struct ComparisonReport {
  std::vector<CompareRow> rows;
  std::vector<RhoSummary> summaries;
  std::vector<SlopeRow> slopes;  // empty with fewer than 3 rho values
  int k_max = 0;
  int order = 0;
};

// One rho of the compare pipeline.
std::vector<CompareRow> compare_at(const RunConfig& c, const MatrixFourierPotential& v, double rho,
                                   RhoSummary* summary = nullptr, std::string* overlap_csv = nullptr);
// All rho values; overlap_csv receives the records with |gap| < 2M.
ComparisonReport compare(const RunConfig& c, const MatrixFourierPotential& v, std::ostream* log = nullptr,
                         std::string* overlap_csv = nullptr);

// Least-squares slope of log median error vs log rho per order; throws
// Parameter with fewer than 3 rho values.
std::vector<SlopeRow> convergence_study(const ComparisonReport& report);

std::string comparison_csv(const ComparisonReport& r);
std::string predictions_json(const ComparisonReport& r);
std::string summary_json(const ComparisonReport& r);

struct WindowRow {
  int j = 0;
  int slot = 0;
  double lambda = 0;
  double shift = 0;  // |lambda - |j delta|^2|
  double mean_offset = 0;  // |lambda - |j delta|^2 - mu(P_0)| with the nearest mean eigenvalue
  bool in_window = true;
};
std::vector<WindowRow> window_rows(const EigenpairSet& set, const DirectionalPotential& p);

struct DecayRow {
  double rho = 0;
  int axis = 0;
  double r1 = 0;
  double offband = 0, threshold1 = 0;
  double tail_sum = 0, threshold2 = 0;
  bool tail_complete = true;
};
DecayRow decay_at(const EigenpairSet& set, const AsymptoticParams& params);

std::string sha256_hex(const std::string& bytes);

int exit_code(ErrorKind k);

// Dispatches on c.mode, writes artifacts and manifest.json under c.output.
// Returns the process exit status; errors are logged, never thrown.
int run(const RunConfig& c, std::ostream& log);

}  // namespace spectra
