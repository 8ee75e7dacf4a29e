// Independent reference computations used by the tests. Deliberately naive.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Points = std::vector<std::vector<double>>;

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// min over all permutations of the mean squared pairing distance, square-rooted.
inline double w2_brute_force(const Points& x, const Points& y) {
  std::vector<std::size_t> perm(y.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0;
    for (std::size_t i = 0; i < x.size(); ++i) c += sq_dist(x[i], y[perm[i]]);
    best = std::min(best, c / static_cast<double>(x.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best);
}

inline Points random_points(std::mt19937_64& rng, std::size_t n, std::size_t d, double radius) {
  std::uniform_real_distribution<double> u(-radius, radius);
  Points p(n, std::vector<double>(d));
  for (auto& v : p)
    for (auto& c : v) c = u(rng);
  return p;
}

// Plain OLS of y on x.
inline void ols(const std::vector<double>& x, const std::vector<double>& y, double& slope,
                double& intercept) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  intercept = (sy - slope * sx) / n;
}

}  // namespace oracle
