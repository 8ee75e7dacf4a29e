#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace mvsde {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (t - t != 0.0) {  // overflow or NaN: the correction term is meaningless
      sum_ = t;
      comp_ = 0.0;
      return;
    }
    if (abs_(sum_) >= abs_(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  static double abs_(double x) { return x < 0 ? -x : x; }
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Equal-weight discrete measure on a list of d-dimensional anchor states.
///
/// Every point carries weight 1/size(). The mean vector and the raw second
/// moment mu(|.|^2) are cached and updated in O(d) per appended point using
/// compensated sums, so moment-only coefficients can read them in O(1).
class EmpiricalMeasure {
 public:
  /// Throws ParameterError on an empty list, DimensionError on mixed sizes.
  static EmpiricalMeasure from_anchors(const std::vector<std::vector<double>>& points);

  /// Points stored row-major in `flat`; `flat.size()` must be a nonzero
  /// multiple of `dim`.
  static EmpiricalMeasure from_flat(std::size_t dim, std::span<const double> flat);

  /// Single-point measure.
  static EmpiricalMeasure dirac(std::span<const double> point);

  /// Appends one anchor in place.
  void push(std::span<const double> point);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return points_.size() / dim_; }

  std::span<const double> point(std::size_t i) const {
    return {points_.data() + i * dim_, dim_};
  }
  /// All points, row-major.
  std::span<const double> flat() const { return points_; }

  std::span<const double> mean() const { return mean_; }
  double second_raw_moment() const { return second_moment_; }

 private:
  explicit EmpiricalMeasure(std::size_t dim);

  std::size_t dim_;
  std::vector<double> points_;
  std::vector<CompensatedSum> coord_sums_;
  CompensatedSum square_sum_;
  std::vector<double> mean_;
  double second_moment_ = 0.0;
};

/// Value-returning append: the result equals from_anchors(old + {point}).
EmpiricalMeasure push_anchor(const EmpiricalMeasure& measure,
                             std::span<const double> point);

/// Uniform measure on the concatenation of all point lists. All inputs must
/// share dimension and point count.
EmpiricalMeasure pooled(std::span<const EmpiricalMeasure> measures);

/// Known 1-D Gaussian law.
struct GaussianTarget {
  double mean = 0.0;
  double variance = 1.0;
};

/// Exact W2 between two 1-D empirical measures via the monotone quantile
/// coupling. Point counts may differ.
double w2_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// Exact W2 for equal-size measures in any dimension by optimal assignment
/// on the squared-distance cost matrix. Throws SizeError past `max_n` points.
double w2_exact_small(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                      std::size_t max_n = 512);

/// Sliced-W2 estimate: root mean of squared 1-D W2 along `n_projections`
/// random unit directions. Deterministic in `seed`. This is an estimator and
/// generally differs from the exact W2 when d > 1.
double w2_sliced(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                 std::size_t n_projections, std::uint64_t seed);

/// W2 between a 1-D empirical measure and a Gaussian, by midpoint quadrature
/// of the squared quantile difference on `n_quad` cells of (0, 1).
double w2_to_gaussian_1d(const EmpiricalMeasure& mu, const GaussianTarget& target,
                         std::size_t n_quad);

/// Minimum-cost perfect matching on a dense n x n row-major cost matrix.
/// Returns the optimal total cost; `assignment[i]` receives the column of row i.
double min_cost_assignment(std::span<const double> cost, std::size_t n,
                           std::vector<std::size_t>* assignment = nullptr);

/// One point per row: `index,x_1,...,x_d`.
void write_measure_csv(std::ostream& out, const EmpiricalMeasure& measure);

}  // namespace mvsde
