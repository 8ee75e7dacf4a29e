#include "mvsde/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <ostream>

#include "mvsde/errors.hpp"

namespace mvsde {

// ---------------------------------------------------------------------------
// RMSE

namespace {

bool is_power_of_two(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

struct RmsePlan {
  std::vector<std::uint32_t> aggregation;  // per coarse level
  std::vector<std::uint32_t> eval_blocks;  // anchor index per t_eval
  SimConfig fine;
  std::vector<SimConfig> coarse;
};

RmsePlan plan_rmse(const RmseConfig& config) {
  if (config.coarse_deltas.empty()) throw ParameterError("need at least one coarse step size");
  if (config.t_eval.empty()) throw ParameterError("need at least one evaluation time");
  if (config.n_paths == 0) throw ParameterError("need at least one path");
  RmsePlan plan;
  plan.fine.grid = AnchorGrid::from_delta(config.tau, config.fine_delta);
  plan.fine.horizon_t = *std::max_element(config.t_eval.begin(), config.t_eval.end());
  plan.fine.initial = config.initial;
  plan.fine.seed = config.seed;
  plan.fine.snapshot_times = {};
  const auto blocks = plan.fine.n_blocks();
  for (double t : config.t_eval) {
    const double ratio = t / config.tau;
    const double k = std::round(ratio);
    if (!(t > 0) || std::abs(ratio - k) > 1e-9 * k) {
      throw ParameterError("evaluation time " + std::to_string(t) + " is not an anchor time");
    }
    plan.eval_blocks.push_back(static_cast<std::uint32_t>(k));
  }
  for (double dc : config.coarse_deltas) {
    const double ratio = dc / config.fine_delta;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * rounded || rounded < 1 ||
        !is_power_of_two(static_cast<std::uint64_t>(rounded))) {
      throw ParameterError("coarse step " + std::to_string(dc) +
                           " is not a power-of-two multiple of the fine step");
    }
    SimConfig c = plan.fine;
    c.grid = AnchorGrid::from_delta(config.tau, dc);
    plan.coarse.push_back(c);
    plan.aggregation.push_back(static_cast<std::uint32_t>(rounded));
  }
  (void)blocks;
  return plan;
}

// Squared errors of one path: [level][eval].
std::vector<double> path_errors(const ModelSpec& model, const RmseConfig& config,
                                const RmsePlan& plan, std::uint32_t path) {
  const NoiseStream fine_noise(config.seed, 1);
  const auto fine = run_wea(model, plan.fine, &fine_noise, path);
  const std::size_t ne = plan.eval_blocks.size();
  std::vector<double> sq(plan.coarse.size() * ne);
  for (std::size_t c = 0; c < plan.coarse.size(); ++c) {
    const NoiseStream coarse_noise(config.seed, plan.aggregation[c]);
    const auto coarse = run_wea(model, plan.coarse[c], &coarse_noise, path);
    for (std::size_t e = 0; e < ne; ++e) {
      const auto a = fine.anchor(0, plan.eval_blocks[e]);
      const auto b = coarse.anchor(0, plan.eval_blocks[e]);
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
      sq[c * ne + e] = s;
    }
  }
  return sq;
}

std::vector<RmseRow> reduce_rmse(const RmseConfig& config, const RmsePlan& plan,
                                 const std::vector<std::vector<double>>& per_path) {
  const std::size_t ne = plan.eval_blocks.size();
  std::vector<RmseRow> rows;
  for (std::size_t e = 0; e < ne; ++e) {
    for (std::size_t c = 0; c < plan.coarse.size(); ++c) {
      CompensatedSum acc;
      for (const auto& sq : per_path) acc.add(sq[c * ne + e]);
      const double rmse = std::sqrt(acc.value() / static_cast<double>(per_path.size()));
      const double delta = config.coarse_deltas[c];
      rows.push_back({-std::log2(delta), delta, config.t_eval[e], rmse, std::log2(rmse)});
    }
  }
  return rows;
}

}  // namespace

std::vector<RmseRow> rmse_paths(const ModelSpec& model, const RmseConfig& config) {
  const auto plan = plan_rmse(config);
  const auto n = static_cast<std::int64_t>(config.n_paths);
  std::vector<std::vector<double>> per_path(config.n_paths);
  std::vector<std::exception_ptr> errors(config.n_paths);
#pragma omp parallel for schedule(dynamic) num_threads(config.workers)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      per_path[i] = path_errors(model, config, plan, static_cast<std::uint32_t>(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return reduce_rmse(config, plan, per_path);
}

std::vector<RmseRow> rmse_paths_serial(const ModelSpec& model, const RmseConfig& config) {
  const auto plan = plan_rmse(config);
  std::vector<std::vector<double>> per_path;
  per_path.reserve(config.n_paths);
  for (std::size_t i = 0; i < config.n_paths; ++i) {
    per_path.push_back(path_errors(model, config, plan, static_cast<std::uint32_t>(i)));
  }
  return reduce_rmse(config, plan, per_path);
}

RateFit fit_rate(std::vector<std::pair<double, double>> points) {
  if (points.size() < 3) throw ParameterError("rate fit needs at least 3 points");
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [log2_delta, log2_rmse] : points) {
    mx += -log2_delta;
    my += log2_rmse;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [log2_delta, log2_rmse] : points) {
    const double dx = -log2_delta - mx;
    const double dy = log2_rmse - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw ParameterError("rate fit abscissae are degenerate");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (const auto& [log2_delta, log2_rmse] : points) {
    const double r = log2_rmse - (fit.intercept + fit.slope * -log2_delta);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.points = std::move(points);
  return fit;
}

std::vector<std::pair<double, double>> rate_points(const std::vector<RmseRow>& rows, double t) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows) {
    if (r.t == t) pts.emplace_back(std::log2(r.delta), r.log2_rmse);
  }
  return pts;
}

// ---------------------------------------------------------------------------
// Jarque-Bera and KDE

JarqueBera jarque_bera(std::span<const double> samples, double alpha) {
  if (samples.size() < 3) throw ParameterError("Jarque-Bera needs at least 3 samples");
  const double n = static_cast<double>(samples.size());
  CompensatedSum sum;
  for (double x : samples) sum.add(x);
  const double mean = sum.value() / n;
  CompensatedSum s2, s3, s4;
  for (double x : samples) {
    const double d = x - mean;
    const double d2 = d * d;
    s2.add(d2);
    s3.add(d2 * d);
    s4.add(d2 * d2);
  }
  const double m2 = s2.value() / n;
  if (!(m2 > 0.0)) throw ParameterError("Jarque-Bera: sample variance is zero");
  const double m3 = s3.value() / n;
  const double m4 = s4.value() / n;
  JarqueBera jb;
  jb.skewness = m3 / std::pow(m2, 1.5);
  jb.kurtosis = m4 / (m2 * m2);
  const double excess = jb.kurtosis - 3.0;
  jb.statistic = n / 6.0 * (jb.skewness * jb.skewness + excess * excess / 4.0);
  jb.p_value = std::exp(-0.5 * jb.statistic);  // chi-square(2) survival function
  jb.reject = jb.p_value < alpha;
  return jb;
}

DensityCurve kde_1d(std::span<const double> samples, std::optional<double> bandwidth,
                    double lo, double hi, std::size_t n_points) {
  if (samples.empty()) throw ParameterError("KDE needs samples");
  if (n_points < 2 || !(hi > lo)) throw ParameterError("KDE grid must have lo < hi and >= 2 points");
  const double n = static_cast<double>(samples.size());
  double h;
  if (bandwidth) {
    if (!(*bandwidth > 0.0)) throw ParameterError("KDE bandwidth must be positive");
    h = *bandwidth;
  } else {
    if (samples.size() < 2) throw ParameterError("Silverman bandwidth needs >= 2 samples");
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    var /= (n - 1.0);
    if (!(var > 0.0)) throw ParameterError("KDE: degenerate sample (zero variance)");
    h = 1.06 * std::sqrt(var) * std::pow(n, -0.2);
  }
  DensityCurve curve;
  curve.bandwidth = h;
  curve.x.resize(n_points);
  curve.density.resize(n_points);
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < n_points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_points - 1);
    double s = 0.0;
    for (double xi : samples) {
      const double u = (x - xi) / h;
      s += std::exp(-0.5 * u * u);
    }
    curve.x[i] = x;
    curve.density[i] = s * norm;
  }
  return curve;
}

std::size_t default_quadrature_size(std::size_t n) {
  return std::max<std::size_t>(1000, 32 * n);
}

void annotate_snapshots(SimOutput& output, const std::optional<GaussianTarget>& oracle,
                        double alpha) {
  if (output.d != 1) return;
  for (auto& s : output.snapshots) {
    auto& d = s.diagnostics;
    if (oracle) {
      d.w2_to_oracle =
          w2_to_gaussian_1d(s.measure, *oracle, default_quadrature_size(s.measure.size()));
    }
    if (s.measure.size() >= 3) {
      try {
        const auto jb = jarque_bera(s.measure.flat(), alpha);
        d.jb_stat = jb.statistic;
        d.jb_reject = jb.reject;
      } catch (const ParameterError&) {
        // degenerate sample; leave the fields empty
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Cost

std::string to_string(Scheme s) { return s == Scheme::kWea ? "wea" : "awea"; }

Scheme scheme_from_string(const std::string& s) {
  if (s == "wea" || s == "WEA") return Scheme::kWea;
  if (s == "awea" || s == "AWEA") return Scheme::kAwea;
  throw ParameterError("unknown scheme '" + s + "'");
}

namespace {

std::uint64_t integral_ratio(double num, double den, const char* what) {
  const double r = num / den;
  const double k = std::round(r);
  if (!(k >= 1.0) || std::abs(r - k) > 1e-9 * k || k > 9.0e15) {
    throw ParameterError(std::string(what) + " must be a positive integer");
  }
  return static_cast<std::uint64_t>(k);
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    throw ParameterError("cost count overflows 64 bits");
  }
  return a * b;
}

}  // namespace

CostReport cost_exact(Scheme scheme, double t, double tau, double delta, std::uint64_t N) {
  if (scheme == Scheme::kWea && N != 1) throw ParameterError("WEA uses a single path (N = 1)");
  if (N == 0) throw ParameterError("N must be positive");
  const std::uint64_t blocks = integral_ratio(t, tau, "t / tau");
  const std::uint64_t M = integral_ratio(tau, delta, "tau / delta");
  // Block k reads a measure of (k + 1) N points on each of N M particle-steps.
  const std::uint64_t tri = (blocks % 2 == 0) ? checked_mul(blocks / 2, blocks + 1)
                                              : checked_mul(blocks, (blocks + 1) / 2);
  CostReport r;
  r.scheme = scheme;
  r.t = t;
  r.tau = tau;
  r.delta = delta;
  r.N = N;
  r.exact_coeff_evals = checked_mul(checked_mul(checked_mul(N, N), M), tri);
  r.paper_order = static_cast<double>(N) * static_cast<double>(N) * (t / delta) * (t / tau);
  return r;
}

double awea_cost_exponent(double r, std::size_t d, double eta_wedge_delta) {
  return 4.0 * (static_cast<double>(d) + 2.0) * (1.0 - r) + 4.0 * r / eta_wedge_delta + 2.0;
}

double wea_cost_exponent(double eta_wedge_delta) { return 4.0 / eta_wedge_delta + 2.0; }

ParamChoice choose_params(Scheme scheme, double epsilon, const RateParams& rate, double r) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in (0, 1)");
  if (!(r >= 0.0 && r <= 1.0)) throw ParameterError("r must lie in [0, 1]");
  const double ewd = rate.eta_wedge_delta();
  ParamChoice p;
  p.scheme = scheme;
  p.epsilon = epsilon;
  p.tau = 1.0;
  p.delta = epsilon * epsilon;
  // v'(r) = 4/(eta ^ delta) - 4(d + 2) >= 0 since eta < 1/(d + 2); the
  // minimum over [0, 1] sits at r = 0.
  p.best_r = awea_cost_exponent(0.0, rate.d(), ewd) <= awea_cost_exponent(1.0, rate.d(), ewd)
                 ? 0.0
                 : 1.0;
  if (scheme == Scheme::kWea) {
    p.r = 1.0;
    p.N = 1.0;
    p.t = std::ceil(std::pow(epsilon, -2.0 / ewd)) * p.tau;
    p.cost_exponent = wea_cost_exponent(ewd);
  } else {
    p.r = r;
    p.N = std::ceil(std::pow(epsilon, -2.0 * (static_cast<double>(rate.d()) + 2.0) * (1.0 - r)));
    p.t = std::ceil(std::pow(epsilon, -2.0 * r / ewd)) * p.tau;
    p.cost_exponent = awea_cost_exponent(r, rate.d(), ewd);
  }
  return p;
}

// ---------------------------------------------------------------------------
// CSV

void write_rates_csv(std::ostream& out, const std::vector<RmseRow>& rows) {
  const auto old = out.precision(17);
  out << "q,delta,t,rmse,log2_rmse\n";
  for (const auto& r : rows) {
    out << r.q << ',' << r.delta << ',' << r.t << ',' << r.rmse << ',' << r.log2_rmse << '\n';
  }
  out.precision(old);
}

void write_fit_csv(std::ostream& out, const std::vector<std::pair<double, RateFit>>& fits) {
  const auto old = out.precision(17);
  out << "t,slope,intercept,r2\n";
  for (const auto& [t, f] : fits) {
    out << t << ',' << f.slope << ',' << f.intercept << ',' << f.r_squared << '\n';
  }
  out.precision(old);
}

void write_density_csv(std::ostream& out,
                       const std::vector<std::pair<std::string, DensityCurve>>& curves) {
  const auto old = out.precision(17);
  out << "x,density,label\n";
  for (const auto& [label, c] : curves) {
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      out << c.x[i] << ',' << c.density[i] << ',' << label << '\n';
    }
  }
  out.precision(old);
}

void write_cost_csv(std::ostream& out, const std::vector<CostReport>& reports) {
  const auto old = out.precision(17);
  out << "scheme,t,tau,delta,N,exact,paper_order\n";
  for (const auto& r : reports) {
    out << to_string(r.scheme) << ',' << r.t << ',' << r.tau << ',' << r.delta << ',' << r.N
        << ',' << r.exact_coeff_evals << ',' << r.paper_order << '\n';
  }
  out.precision(old);
}

}  // namespace mvsde
