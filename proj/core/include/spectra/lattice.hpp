#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace spectra {

// Integer multi-index (n_1..n_d). The frequency vector (n_k pi / a_k) is
// always derived through a BoxGeometry, never stored.
using LatticeVector = std::vector<int>;

class BoxGeometry {
 public:
  explicit BoxGeometry(std::vector<double> edges);

  int dim() const { return static_cast<int>(edges_.size()); }
  const std::vector<double>& edges() const { return edges_; }
  double edge(int k) const { return edges_[k]; }
  double volume() const;

  // |e_k|^2 = (pi/a_k)^2, the squared length of the k-th lattice step.
  double step2(int k) const { return step2_[k]; }
  double frequency(int k, int n) const { return n * step_[k]; }
  std::vector<double> frequency(const LatticeVector& v) const;
  double norm2(const LatticeVector& v) const;
  double norm(const LatticeVector& v) const;
  double dot(const LatticeVector& u, const LatticeVector& v) const;
  double dot(const std::vector<double>& x, const LatticeVector& v) const;

 private:
  std::vector<double> edges_;
  std::vector<double> step_;
  std::vector<double> step2_;
};

// Number of sign flips of v that are distinct: 2^(#nonzero components).
int orbit_size(const LatticeVector& v);
LatticeVector orbit_representative(const LatticeVector& v);
std::vector<LatticeVector> orbit(const LatticeVector& v);
LatticeVector unit(int d, int axis, int sign = 1);
std::string to_string(const LatticeVector& v);

struct AsymptoticParams {
  double rho = 0;
  double alpha = 0;
  int d = 0;
  int l = 0;
  int p = 0;   // l - d
  int q = 0;   // floor(d/(2 alpha)) + 2
  int p2 = 0;  // floor(d/(2 alpha_2)) + 1
  // alpha_k[k] = 3^k alpha for k = 1..max(d, 2); alpha_k[0] = alpha.
  std::vector<double> alpha_k;

  static AsymptoticParams make(double rho, double alpha, int d, int l);

  double a(int k) const { return alpha_k.at(k); }
  double rho_pow(double e) const;
  double rho_alpha() const { return rho_pow(alpha); }
  double witness_radius() const { return p * rho_alpha(); }
  double r1(double delta_norm2) const;
  // r_k = 7 r_{k-1}, k >= 1.
  double r(int k, double delta_norm2) const;
};

// |gamma| ~ rho means c1 rho < |gamma| < c2 rho.
struct Shell {
  double c1 = 0.5;
  double c2 = 2.0;
  bool contains(double norm, double rho) const { return c1 * rho < norm && norm < c2 * rho; }
};

std::vector<LatticeVector> build_lattice(const BoxGeometry& g, double cutoff);
// Nonnegative orbit representatives with |gamma| < cutoff, lexicographic.
std::vector<LatticeVector> build_orbits(const BoxGeometry& g, double cutoff);

struct Decomposition {
  int j = 0;
  LatticeVector beta;
};
Decomposition decompose(const LatticeVector& gamma, int axis);
LatticeVector recompose(int j, const LatticeVector& beta, int axis);

enum class DomainTag { NonResonance, SingleResonance, OtherResonance, HigherResonance };
const char* to_string(DomainTag t);

struct DomainClass {
  DomainTag tag = DomainTag::NonResonance;
  int axis = -1;   // delta = sign * e_axis for SingleResonance
  int sign = 0;
  int j = 0;       // signed coordinate along delta
  LatticeVector beta;
  int order = 0;   // 0 non-resonant, 1 resonant, k >= 2 in E_k
  std::vector<LatticeVector> witnesses;  // b with gamma in V_b(rho^alpha_1)
};

// Precomputed scan set Gamma(p rho^alpha) \ {0} with primitivity flags.
class WitnessTable {
 public:
  WitnessTable(const BoxGeometry& g, const AsymptoticParams& params);
  struct Entry {
    LatticeVector b;
    std::vector<double> freq;
    double norm2;
    bool primitive;
  };
  const std::vector<Entry>& entries() const { return entries_; }
  const AsymptoticParams& params() const { return params_; }
  const BoxGeometry& geometry() const { return geometry_; }

 private:
  BoxGeometry geometry_;
  AsymptoticParams params_;
  std::vector<Entry> entries_;
};

DomainClass classify(const LatticeVector& gamma, const AsymptoticParams& params,
                     const BoxGeometry& g, const Shell& shell = {});
DomainClass classify(const LatticeVector& gamma, const WitnessTable& table, const Shell& shell = {});

// Real-point membership in E_k(rho^alpha_k) (k >= 2).
bool in_E(const std::vector<double>& x, int k, const WitnessTable& table);

// Integer rank of a set of index vectors (fraction-free elimination).
int integer_rank(const std::vector<LatticeVector>& vs);

struct MeasureEstimate {
  double ratio = 0;
  double std_error = 0;
  std::uint64_t samples = 0;
  std::uint64_t accepted = 0;  // draws inside the shell and V_delta
  std::uint64_t single = 0;    // accepted draws outside E_2
};

// Draws are uniform in the bounding box of shell ∩ V_delta(rho^alpha_1) for
// delta = e_axis, which is a slab in x_axis; draw i uses the stream
// derive_seed(seed, i). Rejected draws (outside the shell) are not counted.
MeasureEstimate estimate_measure_ratio(const BoxGeometry& g, int axis, const AsymptoticParams& params,
                                       const Shell& shell, std::uint64_t samples, std::uint64_t seed);

void write_classification_csv(std::ostream& os, const BoxGeometry& g,
                              const std::vector<LatticeVector>& points,
                              const std::vector<DomainClass>& classes);

}  // namespace spectra
