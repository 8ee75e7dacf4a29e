#include "mvsde/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "mvsde/errors.hpp"
#include "mvsde/noise.hpp"
#include "mvsde/normal.hpp"

namespace mvsde {

EmpiricalMeasure::EmpiricalMeasure(std::size_t dim)
    : dim_(dim), coord_sums_(dim), mean_(dim, 0.0) {
  if (dim == 0) throw DimensionError("measure dimension must be positive");
}

EmpiricalMeasure EmpiricalMeasure::from_anchors(
    const std::vector<std::vector<double>>& points) {
  if (points.empty()) throw ParameterError("empirical measure needs at least one point");
  EmpiricalMeasure m(points.front().size());
  m.points_.reserve(points.size() * m.dim_);
  for (const auto& p : points) m.push(p);
  return m;
}

EmpiricalMeasure EmpiricalMeasure::from_flat(std::size_t dim,
                                             std::span<const double> flat) {
  if (dim == 0) throw DimensionError("measure dimension must be positive");
  if (flat.empty()) throw ParameterError("empirical measure needs at least one point");
  if (flat.size() % dim != 0) {
    throw DimensionError("flat point buffer is not a multiple of the dimension");
  }
  EmpiricalMeasure m(dim);
  m.points_.reserve(flat.size());
  for (std::size_t i = 0; i < flat.size(); i += dim) m.push(flat.subspan(i, dim));
  return m;
}

EmpiricalMeasure EmpiricalMeasure::dirac(std::span<const double> point) {
  return from_flat(point.size(), point);
}

void EmpiricalMeasure::push(std::span<const double> point) {
  if (point.size() != dim_) {
    throw DimensionError("point has dimension " + std::to_string(point.size()) +
                         ", measure has " + std::to_string(dim_));
  }
  points_.insert(points_.end(), point.begin(), point.end());
  const double n = static_cast<double>(size());
  for (std::size_t c = 0; c < dim_; ++c) {
    coord_sums_[c].add(point[c]);
    square_sum_.add(point[c] * point[c]);
    mean_[c] = coord_sums_[c].value() / n;
  }
  second_moment_ = square_sum_.value() / n;
}

EmpiricalMeasure push_anchor(const EmpiricalMeasure& measure,
                             std::span<const double> point) {
  EmpiricalMeasure out = measure;
  out.push(point);
  return out;
}

EmpiricalMeasure pooled(std::span<const EmpiricalMeasure> measures) {
  if (measures.empty()) throw ParameterError("pooling needs at least one measure");
  const std::size_t dim = measures.front().dim();
  const std::size_t count = measures.front().size();
  std::vector<double> flat;
  flat.reserve(measures.size() * count * dim);
  for (const auto& m : measures) {
    if (m.dim() != dim) throw DimensionError("pooled measures differ in dimension");
    if (m.size() != count) {
      throw ParameterError("pooled measures must have equal point counts");
    }
    flat.insert(flat.end(), m.flat().begin(), m.flat().end());
  }
  return EmpiricalMeasure::from_flat(dim, flat);
}

namespace {

std::vector<double> sorted_values(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Squared W2 between sorted 1-D samples with uniform weights. Breakpoints of
// both quantile functions are placed on the integer lattice of step 1/(n m),
// so interval weights are exact.
double w2_squared_sorted(const std::vector<double>& x, const std::vector<double>& y) {
  const std::uint64_t n = x.size();
  const std::uint64_t m = y.size();
  CompensatedSum acc;
  std::uint64_t pos = 0, i = 0, j = 0;
  while (i < n && j < m) {
    const std::uint64_t next = std::min((i + 1) * m, (j + 1) * n);
    const double diff = x[i] - y[j];
    acc.add(static_cast<double>(next - pos) * diff * diff);
    pos = next;
    if (next == (i + 1) * m) ++i;
    if (next == (j + 1) * n) ++j;
  }
  return std::max(0.0, acc.value() / static_cast<double>(n * m));
}

}  // namespace

double w2_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.dim() != 1 || nu.dim() != 1) throw DimensionError("w2_1d requires 1-D measures");
  return std::sqrt(w2_squared_sorted(sorted_values(mu.flat()), sorted_values(nu.flat())));
}

double w2_exact_small(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                      std::size_t max_n) {
  if (mu.dim() != nu.dim()) throw DimensionError("w2_exact_small: dimension mismatch");
  if (mu.size() != nu.size()) {
    throw ParameterError("w2_exact_small requires equal point counts");
  }
  const std::size_t n = mu.size();
  if (n > max_n) {
    throw SizeError("w2_exact_small: " + std::to_string(n) + " points exceeds limit " +
                    std::to_string(max_n) + "; use w2_sliced for large measures");
  }
  const std::size_t d = mu.dim();
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = mu.point(i);
    for (std::size_t j = 0; j < n; ++j) {
      const auto b = nu.point(j);
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
      cost[i * n + j] = s;
    }
  }
  const double total = min_cost_assignment(cost, n);
  return std::sqrt(std::max(0.0, total / static_cast<double>(n)));
}

double w2_sliced(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                 std::size_t n_projections, std::uint64_t seed) {
  if (mu.dim() != nu.dim()) throw DimensionError("w2_sliced: dimension mismatch");
  if (n_projections == 0) throw ParameterError("w2_sliced needs at least one projection");
  // Every 1-D projection is +-identity.
  if (mu.dim() == 1) return w2_1d(mu, nu);

  const std::size_t d = mu.dim();
  const NoiseStream directions(seed, 1, StreamTag::kProjections);
  std::vector<double> dir(d), px(mu.size()), py(nu.size());
  CompensatedSum acc;
  for (std::size_t p = 0; p < n_projections; ++p) {
    double norm = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      dir[c] = directions.normal(static_cast<std::uint32_t>(p), 0, 0,
                                 static_cast<std::uint32_t>(c));
      norm += dir[c] * dir[c];
    }
    norm = std::sqrt(norm);
    for (auto& v : dir) v /= norm;
    auto project = [&](const EmpiricalMeasure& m, std::vector<double>& out) {
      for (std::size_t i = 0; i < m.size(); ++i) {
        const auto x = m.point(i);
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += x[c] * dir[c];
        out[i] = s;
      }
      std::sort(out.begin(), out.end());
    };
    project(mu, px);
    project(nu, py);
    acc.add(w2_squared_sorted(px, py));
  }
  return std::sqrt(std::max(0.0, acc.value() / static_cast<double>(n_projections)));
}

double w2_to_gaussian_1d(const EmpiricalMeasure& mu, const GaussianTarget& target,
                         std::size_t n_quad) {
  if (mu.dim() != 1) throw DimensionError("w2_to_gaussian_1d requires a 1-D measure");
  if (n_quad < 100) throw ParameterError("w2_to_gaussian_1d: n_quad must be >= 100");
  if (!(target.variance > 0.0)) throw ParameterError("Gaussian variance must be positive");
  const auto x = sorted_values(mu.flat());
  const std::size_t n = x.size();
  const double sd = std::sqrt(target.variance);
  CompensatedSum acc;
  for (std::size_t q = 0; q < n_quad; ++q) {
    const double u = (static_cast<double>(q) + 0.5) / static_cast<double>(n_quad);
    const auto idx = std::min(n - 1, static_cast<std::size_t>(u * static_cast<double>(n)));
    const double diff = x[idx] - (target.mean + sd * normal_quantile(u));
    acc.add(diff * diff);
  }
  return std::sqrt(std::max(0.0, acc.value() / static_cast<double>(n_quad)));
}

double min_cost_assignment(std::span<const double> cost, std::size_t n,
                           std::vector<std::size_t>* assignment) {
  if (cost.size() != n * n) throw DimensionError("cost matrix must be n x n");
  if (n == 0) return 0.0;
  // Shortest augmenting path with row/column potentials, O(n^3).
  // Index 0 is a sentinel column; rows and columns are 1-based inside.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t col0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const std::size_t row0 = match[col0];
      double delta = kInf;
      std::size_t col1 = 0;
      for (std::size_t col = 1; col <= n; ++col) {
        if (used[col]) continue;
        const double reduced = cost[(row0 - 1) * n + (col - 1)] - u[row0] - v[col];
        if (reduced < minv[col]) {
          minv[col] = reduced;
          way[col] = col0;
        }
        if (minv[col] < delta) {
          delta = minv[col];
          col1 = col;
        }
      }
      for (std::size_t col = 0; col <= n; ++col) {
        if (used[col]) {
          u[match[col]] += delta;
          v[col] -= delta;
        } else {
          minv[col] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  // Recompute the total from the matching rather than the potentials.
  double total = 0.0;
  if (assignment) assignment->assign(n, 0);
  for (std::size_t col = 1; col <= n; ++col) {
    const std::size_t row = match[col];
    total += cost[(row - 1) * n + (col - 1)];
    if (assignment) (*assignment)[row - 1] = col - 1;
  }
  return total;
}

void write_measure_csv(std::ostream& out, const EmpiricalMeasure& measure) {
  const auto old = out.precision(17);
  out << "index";
  for (std::size_t c = 0; c < measure.dim(); ++c) out << ",x_" << (c + 1);
  out << '\n';
  for (std::size_t i = 0; i < measure.size(); ++i) {
    out << i;
    for (double v : measure.point(i)) out << ',' << v;
    out << '\n';
  }
  out.precision(old);
}

}  // namespace mvsde
