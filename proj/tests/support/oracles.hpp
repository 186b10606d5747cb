#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's implementation of the quantity being checked.

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

// Standard normal draws from Box-Muller over the raw 64-bit engine, so the
// stream is identical on every standard library.
class Normal {
 public:
  explicit Normal(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (spare_) {
      spare_ = false;
      return cached_;
    }
    double u1 = 0;
    while (u1 == 0) u1 = unit();
    const double u2 = unit();
    const double r = std::sqrt(-2 * std::log(u1));
    cached_ = r * std::sin(2 * std::numbers::pi * u2);
    spare_ = true;
    return r * std::cos(2 * std::numbers::pi * u2);
  }

  double unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  std::uint64_t raw() { return rng_(); }

 private:
  std::mt19937_64 rng_;
  bool spare_ = false;
  double cached_ = 0;
};

struct Labeled {
  std::vector<std::vector<double>> points;
  std::vector<int> labels;
};

// `clusters` isotropic Gaussians in `dim` dimensions; cluster c is centered
// on the unit vector e_c (centers are sqrt(2) apart). Points are dealt
// round-robin so every cluster gets n / clusters of them.
inline Labeled gaussian_blobs(int clusters, int n, int dim, double sigma, std::uint64_t seed) {
  Normal normal(seed);
  Labeled out;
  for (int i = 0; i < n; ++i) {
    const int c = i % clusters;
    std::vector<double> p(dim);
    for (int d = 0; d < dim; ++d) p[d] = (d == c ? 1.0 : 0.0) + sigma * normal();
    out.points.push_back(std::move(p));
    out.labels.push_back(c);
  }
  return out;
}

inline double choose2(double n) { return n * (n - 1) / 2; }

// Adjusted Rand Index from the contingency table (Hubert and Arabie).
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  double index = 0, sumRows = 0, sumCols = 0;
  for (const auto& [key, n] : table) index += choose2(n);
  for (const auto& [key, n] : rows) sumRows += choose2(n);
  for (const auto& [key, n] : cols) sumCols += choose2(n);
  const double expected = sumRows * sumCols / choose2(static_cast<double>(a.size()));
  const double maxIndex = (sumRows + sumCols) / 2;
  if (maxIndex == expected) return 1.0;
  return (index - expected) / (maxIndex - expected);
}

// Diagonal Gaussian density evaluated directly (no logs).
inline double diag_gaussian(const std::vector<double>& x, const std::vector<double>& mean,
                            const std::vector<double>& var) {
  double p = 1;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double diff = x[d] - mean[d];
    p *= std::exp(-diff * diff / (2 * var[d])) / std::sqrt(2 * std::numbers::pi * var[d]);
  }
  return p;
}

}  // namespace oracle
