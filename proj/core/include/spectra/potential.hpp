#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spectra/lattice.hpp"

namespace spectra {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// V(x) = sum over orbit representatives g of W_g u_g(x), where
// u_g(x) = prod_k cos(g_k pi x_k / a_k). Stored matrices are the cosine-series
// coefficients W_g. Conversions:
//   full-lattice coefficient   v_g = W_g / |A_g|         (sum over all sign flips)
//   orthonormal coefficient    W_g * sqrt(mu(F) / |A_g|)  (w.r.t. sqrt(|A_g|/mu(F)) u_g)
struct MatrixFourierPotential {
  int m = 0;
  int l = 0;
  BoxGeometry geometry{std::vector<double>{1.0, 1.0}};
  std::map<LatticeVector, Matrix> coefficients;

  int dim() const { return geometry.dim(); }
  // Checks symmetry, nonnegative indices, shapes. Throws on violation.
  void validate() const;
};

MatrixFourierPotential make_zero_potential(const BoxGeometry& g, int m, int l);

// Signed full-lattice expansion g -> W_rep / |A_rep|.
std::map<LatticeVector, Matrix> expand_orbits(const MatrixFourierPotential& v);

struct DecaySums {
  Matrix S;  // sum W_ij^2 (1 + |g|^(2l)) over stored orbits
  Matrix M;  // sum |W_ij|
};
DecaySums validate_decay(const MatrixFourierPotential& v);

struct TruncationResult {
  MatrixFourierPotential potential;
  Matrix tail;   // l2 norm of discarded coefficients per entry
  Matrix bound;  // sqrt(S_ij) rho^(-p alpha)
  double radius = 0;
};
TruncationResult truncate(const MatrixFourierPotential& v, const AsymptoticParams& params);

struct DirectionalPotential {
  int axis = 0;
  int m = 0;
  double delta_norm2 = 1;       // |delta|^2 = (pi/a_axis)^2
  std::map<int, Matrix> coefficients;  // n >= 0, P(s) = sum_n p_n cos(n s)

  int support() const;
  Matrix mean() const;
  Matrix evaluate(double s) const;
  // max over a uniform grid of 8192 intervals on [0, pi] of ||P(s)||_2
  double sup_norm() const;
};

DirectionalPotential directional_part(const MatrixFourierPotential& v, int axis);
MatrixFourierPotential remainder(const MatrixFourierPotential& v, int axis);

struct CouplingEntry {
  LatticeVector orbit;  // n1 delta + beta1 as a nonnegative representative
  LatticeVector beta1;  // orbit with the delta component zeroed
  int n1 = 0;
  Matrix d;             // (1/mu(F)) int v(x) cos(n1 s) u_beta1(x) dx = W / |A|
  int multiplicity = 1; // number of signed (beta1, n1) keys merged into this entry
};

struct CouplingTable {
  int axis = 0;
  double radius = 0;
  std::vector<CouplingEntry> entries;
};

CouplingTable coupling_table(const MatrixFourierPotential& v, int axis, const AsymptoticParams& params);

struct GeneratorSpec {
  std::uint64_t seed = 7;
  int m = 2;
  int l = 17;
  double amplitude = 1.0;
  double support_radius = 1.0;
};

// Entries W_ij = W_ji = amplitude * min(1, (2/(1+|g|))^(l+1)) * U(-1,1) over
// the orbits with |g| <= support_radius, drawn in lexicographic order from a
// single splitmix64 stream.
MatrixFourierPotential generate_random_potential(const GeneratorSpec& spec, const BoxGeometry& g);

Matrix evaluate(const MatrixFourierPotential& v, const std::vector<double>& x);

// Sum of spectral norms of the stored matrices; bounds sup_x ||V(x)||_2.
double sup_norm_bound(const MatrixFourierPotential& v);

std::string potential_to_json(const MatrixFourierPotential& v);
MatrixFourierPotential potential_from_json(const std::string& text);
MatrixFourierPotential load_potential(const std::string& path);
void save_potential(const MatrixFourierPotential& v, const std::string& path);

}  // namespace spectra
