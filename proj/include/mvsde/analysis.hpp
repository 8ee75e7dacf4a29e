#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvsde/measures.hpp"
#include "mvsde/model.hpp"
#include "mvsde/schemes.hpp"

namespace mvsde {

// ---------------------------------------------------------------------------
// Strong convergence study

struct RmseConfig {
  double tau = 1.0;
  double fine_delta = 0x1.0p-13;
  std::vector<double> coarse_deltas;  // each a power-of-two multiple of fine_delta
  std::vector<double> t_eval;         // anchor times
  std::size_t n_paths = 100;
  std::uint64_t seed = 0;
  InitialSampler initial;
  int workers = 1;
};

struct RmseRow {
  double q;      // -log2(delta)
  double delta;
  double t;
  double rmse;
  double log2_rmse;
};

/// RMSE(t, delta) between each coarse resolution and the fine reference,
/// over `n_paths` single-path runs. Coarse increments are sums of the fine
/// increments, so every path is a strong coupling. Paths are distributed
/// over workers; the result does not depend on the worker count.
std::vector<RmseRow> rmse_paths(const ModelSpec& model, const RmseConfig& config);

/// Same study with paths run one after another. Reference for rmse_paths.
std::vector<RmseRow> rmse_paths_serial(const ModelSpec& model, const RmseConfig& config);

/// OLS fit of log2 RMSE against q = -log2(delta). Strong order 1/2 shows up
/// as slope -1/2.
struct RateFit {
  std::vector<std::pair<double, double>> points;  // (log2_delta, log2_rmse)
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Needs at least 3 points with distinct abscissae.
RateFit fit_rate(std::vector<std::pair<double, double>> points);

/// Rows of `rows` at time t, as fit_rate input.
std::vector<std::pair<double, double>> rate_points(const std::vector<RmseRow>& rows, double t);

// ---------------------------------------------------------------------------
// Distribution diagnostics

struct JarqueBera {
  double statistic;
  double p_value;
  bool reject;
  double skewness;
  double kurtosis;
};

/// JB = n/6 (S^2 + (K - 3)^2 / 4) from biased sample moments; p-value from
/// the chi-square(2) upper tail. Throws on fewer than 3 samples or zero
/// variance.
JarqueBera jarque_bera(std::span<const double> samples, double alpha = 0.05);

struct DensityCurve {
  std::vector<double> x;
  std::vector<double> density;
  double bandwidth;
};

/// Gaussian-kernel density estimate on a uniform grid of `n_points` over
/// [lo, hi]. Without a bandwidth, Silverman's 1.06 sigma n^(-1/5) is used.
DensityCurve kde_1d(std::span<const double> samples, std::optional<double> bandwidth,
                    double lo, double hi, std::size_t n_points);

/// Quadrature size used for W2-to-Gaussian diagnostics of an n-point measure.
std::size_t default_quadrature_size(std::size_t n);

/// Fills w2_to_oracle (when an oracle is given) and the Jarque-Bera fields of
/// every snapshot of a 1-D run.
void annotate_snapshots(SimOutput& output, const std::optional<GaussianTarget>& oracle,
                        double alpha = 0.05);

// ---------------------------------------------------------------------------
// Cost model

enum class Scheme { kWea, kAwea };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct CostReport {
  Scheme scheme;
  double t, tau, delta;
  std::uint64_t N;
  /// Coefficient evaluations weighted by the measure size they read:
  /// N^2 M sum_{k=0}^{t/tau-1} (k+1).
  std::uint64_t exact_coeff_evals;
  /// The leading-order estimate N^2 (t/delta)(t/tau).
  double paper_order;
};

/// Throws ParameterError unless t/tau and tau/delta are integers.
CostReport cost_exact(Scheme scheme, double t, double tau, double delta, std::uint64_t N = 1);

/// v(r) = 4(d+2)(1-r) + 4r/(eta ^ delta) + 2.
double awea_cost_exponent(double r, std::size_t d, double eta_wedge_delta);
/// 4/(eta ^ delta) + 2.
double wea_cost_exponent(double eta_wedge_delta);

struct ParamChoice {
  Scheme scheme;
  double epsilon;
  double tau;
  double delta;
  double t;
  double N;
  double r;
  double cost_exponent;  // cost ~ epsilon^(-cost_exponent)
  double best_r;         // argmin of v over [0, 1]
};

/// Error-driven parameters: tau = 1, delta = eps^2, and for WEA
/// t = ceil(eps^(-2/(eta ^ delta))); for AWEA t = ceil(eps^(-2r/(eta ^ delta)))
/// and N = ceil(eps^(-2(d+2)(1-r))).
ParamChoice choose_params(Scheme scheme, double epsilon, const RateParams& rate, double r = 0.0);

// ---------------------------------------------------------------------------
// CSV outputs

void write_rates_csv(std::ostream& out, const std::vector<RmseRow>& rows);
/// One row per fit: t,slope,intercept,r2.
void write_fit_csv(std::ostream& out, const std::vector<std::pair<double, RateFit>>& fits);
void write_density_csv(std::ostream& out,
                       const std::vector<std::pair<std::string, DensityCurve>>& curves);
void write_cost_csv(std::ostream& out, const std::vector<CostReport>& reports);

}  // namespace mvsde
