#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvsde/measures.hpp"

namespace mvsde {

/// Read-only view of the measure argument of the coefficients.
///
/// Either wraps an EmpiricalMeasure (points available) or carries only a mean
/// vector and raw second moment, e.g. when the measure is frozen at known
/// moments. The viewed storage must outlive the view.
class MeasureView {
 public:
  MeasureView(const EmpiricalMeasure& measure)  // NOLINT(google-explicit-constructor)
      : measure_(&measure),
        mean_(measure.mean()),
        second_moment_(measure.second_raw_moment()) {}

  static MeasureView from_moments(std::span<const double> mean, double second_moment) {
    return MeasureView(mean, second_moment);
  }

  std::size_t dim() const { return mean_.size(); }
  std::span<const double> mean() const { return mean_; }
  double second_raw_moment() const { return second_moment_; }
  /// sqrt(mu(|.|^2)), clamped at zero against rounding dust.
  double root_second_moment() const;

  bool has_points() const { return measure_ != nullptr; }
  /// Underlying measure; null for moment-only views.
  const EmpiricalMeasure* measure() const { return measure_; }

 private:
  MeasureView(std::span<const double> mean, double second_moment)
      : mean_(mean), second_moment_(second_moment) {}

  const EmpiricalMeasure* measure_ = nullptr;
  std::span<const double> mean_;
  double second_moment_;
};

/// Writes f(x, mu) (size d) into `out`.
using DriftFn =
    std::function<void(std::span<const double> x, const MeasureView& mu, std::span<double> out)>;
/// Writes g(x, mu) (d x m, row-major) into `out`.
using DiffusionFn = DriftFn;

/// Constants of the dissipativity / monotonicity / linear-growth assumptions.
struct DissipativityConstants {
  double kappa1;
  double kappa2;
  double kappa1_bar;
  double kappa2_bar;
  double rho;
  double C;
  double L;

  /// Throws ParameterError unless kappa1 > kappa2 > 0, kappa1_bar >
  /// kappa2_bar > 0, rho > 0 and L > 0.
  void validate() const;
};

/// 1-D coefficients affine in (x, mean, sqrt(second moment)):
/// f = a x + b m + c,  g = p x + q sqrt(s) + r.
struct LinearCoefficients {
  double a = 0, b = 0, c = 0;
  double p = 0, q = 0, r = 0;
};

struct StationaryMoments {
  double mean;
  double second_moment;
};

struct ModelSpec {
  std::string name;
  std::size_t d = 1;
  std::size_t m = 1;
  DriftFn drift;
  DiffusionFn diffusion;
  std::optional<GaussianTarget> gaussian_oracle;
  std::optional<StationaryMoments> moment_oracle;
  std::optional<DissipativityConstants> constants;
  std::optional<LinearCoefficients> linear;
};

/// Rate exponents: eta = rho / ((d + 2)(rho + 2)) and delta in
/// (0, 1 - kappa2_bar / kappa1_bar).
class RateParams {
 public:
  /// Throws ParameterError if rho <= 0, d == 0 or delta is outside its range.
  RateParams(double rho, std::size_t d, double delta, double kappa1_bar, double kappa2_bar);
  /// Without monotonicity constants; only checks 0 < delta < 1.
  RateParams(double rho, std::size_t d, double delta);

  double rho() const { return rho_; }
  std::size_t d() const { return d_; }
  double delta() const { return delta_; }
  double eta() const { return eta_of(rho_, d_); }
  double eta_wedge_delta() const;

  static double eta_of(double rho, std::size_t d);

 private:
  double rho_;
  std::size_t d_;
  double delta_;
};

/// Affine 1-D model from coefficients; metadata left empty except `linear`.
ModelSpec make_linear_model(std::string name, const LinearCoefficients& coeffs);

/// Built-in models: "example1", "example2", "ou" (f = -x, g = 1) and "zero".
/// Throws ParameterError on unknown names.
ModelSpec builtin(const std::string& name);
std::vector<std::string> builtin_names();

/// Solves the stationary mean and second-moment balance of an affine 1-D
/// model, returning the unique root with sqrt(s) >= 0 and s >= m^2.
StationaryMoments stationary_moments_linear(const LinearCoefficients& coeffs);
StationaryMoments stationary_moments_linear(const ModelSpec& model);

/// LHS - RHS of 2 x.f + (1 + rho)|g|^2 <= -kappa1 |x|^2 + kappa2 mu(|.|^2) + C.
double check_dissipativity_pointwise(const ModelSpec& model,
                                     const DissipativityConstants& k,
                                     std::span<const double> x, const MeasureView& mu);

/// LHS - RHS of the one-sided monotonicity inequality
/// 2 dx.df + |dg|^2 <= -kappa1_bar |dx|^2 + kappa2_bar W2^2(mu1, mu2).
/// W2 is exact: sorted coupling in 1-D, assignment otherwise. Both views must
/// wrap point measures.
double check_monotonicity_pointwise(const ModelSpec& model,
                                    const DissipativityConstants& k,
                                    std::span<const double> x1, std::span<const double> x2,
                                    const MeasureView& mu1, const MeasureView& mu2);

struct SamplerConfig {
  double box_radius = 5.0;        // x-draws uniform on [-R, R]^d
  std::size_t measure_size = 6;   // random measures have 1..measure_size points
  double measure_radius = 5.0;    // measure points uniform on [-R, R]^d
};

struct ViolationRecord {
  std::string inequality;
  double max_violation = -1e300;
  std::vector<double> witness_x;
  std::vector<double> witness_y;  // second state, where relevant
  double witness_mean = 0.0;      // first component of the measure mean
  double witness_second_moment = 0.0;
};

struct AssumptionReport {
  std::vector<ViolationRecord> records;  // dissipativity, monotonicity, lipschitz, growth
  std::size_t n_samples = 0;
  bool all_satisfied() const;
  /// Human-readable summary. Nonpositive maxima are reported as sampled
  /// evidence, not proof.
  std::string summary() const;
};

AssumptionReport check_assumptions_sampled(const ModelSpec& model,
                                           const DissipativityConstants& k,
                                           const SamplerConfig& sampler,
                                           std::size_t n_samples, std::uint64_t seed);

}  // namespace mvsde
