#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace spectra {

// Neumaier variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Sorts by descending magnitude, then sums with compensation.
double sum_descending(std::vector<double> terms);

// splitmix64: state += 0x9E3779B97F4A7C15;
//   z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9;
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB;  return z ^ (z >> 31).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  // (next() >> 11) * 2^-53, uniform in [0,1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

// Seed for an independent stream keyed by (seed, counter).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t counter);

// 17 significant digits, '.' decimal point, locale independent.
std::string format_double(double x);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::vector<double> residuals;
};

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> v);

// int_0^pi cos(k s) c_p(s) c_q(s) ds for the orthonormal Neumann cosines
// c_n = sqrt(eps_n/pi) cos(n s), eps_0 = 1, eps_n = 2 (n > 0). Arguments may
// be negative; only |k|, |p|, |q| matter.
double cosine_triple(int k, int p, int q);

}  // namespace spectra
