#include "spectra/numeric.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "spectra/errors.hpp"

namespace spectra {

double sum_descending(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end(),
            [](double a, double b) { return std::abs(a) > std::abs(b); });
  CompensatedSum s;
  for (double t : terms) s.add(t);
  return s.value();
}

std::uint64_t SplitMix64::next() {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t counter) {
  SplitMix64 g(seed ^ (counter * 0xD1B54A32D192ED03ULL));
  g.next();
  return g.next();
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) fail(ErrorKind::Parameter, "least_squares needs >= 2 paired points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) fail(ErrorKind::Parameter, "least_squares with degenerate abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = y[i] - (fit.intercept + fit.slope * x[i]);
    fit.residuals.push_back(r);
    ss += r * r;
  }
  fit.slope_stderr = n > 2 ? std::sqrt(ss / (n - 2) / sxx) : 0.0;
  return fit;
}

double median(std::vector<double> v) {
  if (v.empty()) fail(ErrorKind::Parameter, "median of empty sample");
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double cosine_triple(int k, int p, int q) {
  k = std::abs(k);
  p = std::abs(p);
  q = std::abs(q);
  int zeros = (k + p + q == 0) + (k + p - q == 0) + (k - p + q == 0) + (k - p - q == 0);
  if (zeros == 0) return 0.0;
  double eps = (p ? 2.0 : 1.0) * (q ? 2.0 : 1.0);
  return std::sqrt(eps) * 0.25 * zeros;
}

}  // namespace spectra
