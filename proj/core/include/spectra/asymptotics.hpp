#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "spectra/lattice.hpp"
#include "spectra/potential.hpp"
#include "spectra/sturm1d.hpp"

namespace spectra {

// Comparison mode chi_{j,slot,beta} = u_beta phi_{j,slot}; beta is a
// nonnegative representative with beta[axis] = 0.
struct State {
  int j = 0;
  int slot = 0;
  LatticeVector beta;
  auto operator<=>(const State&) const = default;
};
std::string to_string(const State& s);

struct ExpansionOptions {
  int k_max = 4;
  double prune = 1e-13;       // drop |A| <= prune * max_g ||W_g||
  double gap_floor = 0;       // <= 0: minimum 1D gap over the labeled bands
  double guard_factor = 0.5;
  bool strict_guards = true;  // throw SmallDenominator on a guard violation
  double radius_override = 0; // > 0: use this r for every step (tests)
};

struct GuardViolation {
  State state;
  double denominator = 0;
  double floor = 0;
};

struct PathSums {
  std::vector<double> S;                // S_k', k = 1..k_max
  std::vector<std::uint64_t> paths;     // admissible paths per order
  double min_denominator = INFINITY;
  std::vector<GuardViolation> violations;
};

class ExpansionContext {
 public:
  ExpansionContext(const BoxGeometry& geometry, const AsymptoticParams& params, const CouplingTable& table,
                   const EigenpairSet& spectra, ExpansionOptions options = {});

  const AsymptoticParams& params() const { return params_; }
  const EigenpairSet& spectra() const { return spectra_; }
  const ExpansionOptions& options() const { return options_; }
  int axis() const { return spectra_.axis; }
  double gap_floor() const { return gap_floor_; }
  // r_i, i >= 1
  double r(int i) const;
  double lambda(const State& s) const;
  const Eigenpair1D& pair(const State& s) const { return spectra_.band(s.j, s.slot); }

  // (t - s) in Q(rho^alpha, 6r): 0 < |beta_t - beta_s| < rho^alpha, |(j_t - j_s) delta| < 6r.
  bool in_Q(const State& s, const State& t, double r) const;

  // Triple sum over coupling entries, |n| < 2r, components; 0 outside Q.
  double a_coefficient(const State& s, const State& t, double r) const;
  // All t with A(s -> t) kept after pruning, lexicographic; same values as
  // a_coefficient but from cached 1D factors.
  const std::vector<std::pair<State, double>>& neighbors(const State& s, double r) const;
  double a_fast(const State& s, const State& t, double r) const;

  // Sum over Q(rho^alpha, 6 r_1) of |A(s -> t)|.
  double a_sum(const State& s) const;

  // S_k'(Lambda), k = 1..k_max, by propagating path weights step by step.
  PathSums path_sums(const State& ref, double Lambda, int k_max) const;
  // Same sums by explicit depth-first path enumeration (small k only).
  std::vector<double> path_sums_dfs(const State& ref, double Lambda, int k_max) const;

  // C_k'(Lambda) = sum over paths ref -> s_1 .. s_k (all != ref) of
  // prod A/(Lambda - lambda) times sum_{u != ref} A(s_k -> u) c(u).
  double residual_sum(const State& ref, double Lambda, int k, const std::function<double(const State&)>& c) const;

  // Coefficients of h_i over the two-step targets s_2.
  std::vector<std::map<State, double>> h_functions(const State& ref, int i_max) const;

 private:
  const Matrix& factor(std::size_t entry, int n_window) const;
  int n_window(double r) const;
  int state1d(int j, int slot) const { return j * spectra_.m + slot; }
  double guard_floor(const State& ref, const State& t) const;

  BoxGeometry geometry_;
  AsymptoticParams params_;
  CouplingTable table_;
  EigenpairSet spectra_;
  ExpansionOptions options_;
  double gap_floor_ = 0;
  double prune_abs_ = 0;
  double delta_ = 1;
  Matrix phi_;  // rows (n, i), columns 1D states j * m + slot
  mutable std::map<std::pair<std::size_t, int>, Matrix> factors_;
  mutable std::map<std::pair<State, int>, std::vector<std::pair<State, double>>> neighbors_;
};

struct ExpansionState {
  State base;
  double lambda_base = 0;
  std::vector<double> E;                     // E_0 .. E_{s_max}
  std::vector<std::vector<double>> S_terms;  // S_terms[s-1][k-1] = S_k'(lambda + E_{s-1})
  std::vector<double> remainder_estimates;   // rho^(-(s+1) alpha_2), s = 0..s_max
  int k_max = 0;
  double min_denominator = INFINITY;
  std::uint64_t paths_enumerated = 0;
  std::vector<GuardViolation> violations;
};

ExpansionState e_iterate(const ExpansionContext& ctx, const State& base, int s_max);

struct Prediction {
  double Lambda = 0;
  double budget = 0;
};

// Lambda = lambda + E_{s-1}, budget = budget_constant * rho^(-s alpha_2).
Prediction predict(const ExpansionState& state, int s, const AsymptoticParams& params, double budget_constant = 1.0);

}  // namespace spectra
