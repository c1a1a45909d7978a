#pragma once

#include <string>
#include <vector>

#include "spectra/lattice.hpp"
#include "spectra/linalg.hpp"
#include "spectra/potential.hpp"

namespace spectra {

// Coefficient layout for T(P): row n * m + i <-> C_{n,i}, the orthonormal
// Neumann cosine sqrt(eps_n/pi) cos(n s) in component i.
Matrix assemble_T(const DirectionalPotential& p, int n_trunc);

struct Eigenpair1D {
  int j = -1;     // band label (dominant cosine index), -1 if unlabeled
  int slot = -1;  // position within band j, ascending in lambda
  double lambda = 0;
  Vector coeffs;  // length m (n_trunc + 1)
  double residual = 0;
  bool in_window = true;  // |lambda - |j delta|^2| <= sup ||P||

  double coeff(int n, int i, int m) const { return n < coeffs.size() / m ? coeffs(n * m + i) : 0.0; }
};

struct EigenpairSet {
  std::vector<Eigenpair1D> pairs;  // ascending lambda
  int n_trunc = 0;
  int axis = 0;
  int m = 0;
  double delta_norm2 = 1;
  double sup_P = 0;
  double norm = 0;   // ||T||_2
  int max_band = -1; // labeled bands are 0..max_band

  // Pair for (band, slot); throws Coverage if absent.
  const Eigenpair1D& band(int j, int slot) const;
  bool has_band(int j) const { return j >= 0 && j <= max_band; }
};

EigenpairSet eigensolve_T(const Matrix& t, int m, double tol = 1e-12);

// Labels every pair by its dominant cosine index n (ties: eigenvalue closest
// to |n delta|^2) and keeps bands 0..max_band, each of which must carry
// exactly m pairs. Pairs whose dominant index exceeds max_band are dropped.
EigenpairSet label_bands(const EigenpairSet& set, double sup_P, int max_band);

// assemble -> eigensolve -> label with max_band = n_trunc / 2.
EigenpairSet solve_directional(const DirectionalPotential& p, int n_trunc, double tol = 1e-12);

// Gram deviation max |<phi_a, phi_b> - delta_ab| over the labeled pairs.
double gram_deviation(const EigenpairSet& set);

struct DecayReport {
  double r = 0;
  double threshold1 = 0;  // rho^(-(l-1) alpha)
  double threshold2 = 0;  // rho^(-(l-2) alpha)
  struct Row {
    int j = 0;
    int slot = 0;
    double offband = 0;  // max_{n >= 2r, i} |<phi_j, C_{n,i}>|
    double tail_sum = 0;  // max over (n, n1, i) of sum_{|j1| >= 6r} |<phi_{j+j1}, C_{n+n1,i}>|
  };
  std::vector<Row> rows;  // pairs with |j| + 1 < r
  double max_offband = 0;
  double max_tail_sum = 0;
  bool tail_complete = true;  // false if labeled bands stop before the 6r tail is exhausted
};

DecayReport decay_report(const EigenpairSet& set, const AsymptoticParams& params, double r);

std::string spectrum_to_json(const EigenpairSet& set, double drop_below = 1e-15);

}  // namespace spectra
