#pragma once

#include <Eigen/SparseCore>
#include <map>
#include <string>
#include <vector>

#include "spectra/lattice.hpp"
#include "spectra/linalg.hpp"
#include "spectra/potential.hpp"
#include "spectra/sturm1d.hpp"

namespace spectra {

using SparseMatrix = Eigen::SparseMatrix<double>;

// Orthonormal product-cosine basis: orbit representatives |g| < cutoff times
// m components; position of (g, i) is index(g) * m + i.
class OracleBasis {
 public:
  OracleBasis(const BoxGeometry& geometry, double cutoff, int m, int cap = 4000);
  OracleBasis(const BoxGeometry& geometry, std::vector<LatticeVector> orbits, int m, double cutoff);

  int size() const { return static_cast<int>(orbits_.size()) * m_; }
  int m() const { return m_; }
  double cutoff() const { return cutoff_; }
  const BoxGeometry& geometry() const { return geometry_; }
  const std::vector<LatticeVector>& orbits() const { return orbits_; }
  // -1 if g is not in the basis
  int find(const LatticeVector& g) const;

 private:
  BoxGeometry geometry_;
  double cutoff_ = 0;
  int m_ = 0;
  std::vector<LatticeVector> orbits_;
  std::map<LatticeVector, int> position_;
};

// Matrix of multiplication by V in the basis; exactly symmetric.
SparseMatrix potential_matrix(const MatrixFourierPotential& v, const OracleBasis& basis);
// diag(|g|^2) + potential_matrix(v)
SparseMatrix assemble_L(const MatrixFourierPotential& v, const OracleBasis& basis);

struct FullSpectrum {
  OracleBasis basis;
  Vector values;
  Matrix vectors;
  Vector residuals;
  double norm = 0;
};

FullSpectrum eigen_full(const MatrixFourierPotential& v, const OracleBasis& basis, double tol = 1e-12);
FullSpectrum eigen_full(const MatrixFourierPotential& v, double cutoff, double tol = 1e-12, int cap = 4000);

// chi_{j,beta} = u_beta phi_j restricted to the basis; components with cosine
// index above the 1D truncation are zero.
Vector embed(const Eigenpair1D& pair, const LatticeVector& beta, int axis, const OracleBasis& basis);

struct OverlapRecord {
  int N = 0;
  double Lambda = 0;
  double c = 0;
  double gap = 0;       // Lambda_N - lambda_{j,beta}
  double lhs = 0;       // (Lambda_N - lambda) c
  double rhs = 0;       // <psi_N, (V - P) chi>
  double tail = 0;      // ||(L_0 + P) chi - lambda chi|| + residual_N ||chi||
  double binding_residual() const { return std::abs(lhs - rhs); }
};

struct OverlapSet {
  int j = 0;
  int slot = 0;
  LatticeVector beta;
  double lambda = 0;    // lambda_j + |beta|^2
  double chi_norm2 = 0; // Parseval target
  double parseval = 0;  // sum_N c^2
  double tail = 0;
  std::vector<OverlapRecord> records;
};

// Operators shared by all overlap computations along one direction.
struct BindingOperators {
  int axis = 0;
  SparseMatrix separable;  // diag(|g|^2) + P
  SparseMatrix coupling;   // V - P
};
BindingOperators binding_operators(const MatrixFourierPotential& v, int axis, const OracleBasis& basis);

OverlapSet overlaps(const FullSpectrum& full, const BindingOperators& ops, const EigenpairSet& comparison,
                    int j, int slot, const LatticeVector& beta);

// c(N, s) = <psi_N, chi_s> for all N.
Vector overlap_vector(const FullSpectrum& full, const Eigenpair1D& pair, const LatticeVector& beta, int axis);

struct MatchResult {
  int N = -1;
  double Lambda = 0;
  double c = 0;
  double gap = 0;
  std::vector<int> degenerate;  // other candidates with |Lambda - Lambda_N| <= 1e-9
};

// Selection rule: argmax |c| over |Lambda_N - lambda| < 2M, then
// |c| > c_floor is asserted (NoMatch otherwise).
MatchResult match(const OverlapSet& set, double M, double c_floor);

std::string overlaps_to_csv(const OverlapSet& set);
std::string full_spectrum_to_csv(const FullSpectrum& full);

}  // namespace spectra
