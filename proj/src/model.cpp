#include "mvsde/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mvsde/errors.hpp"
#include "mvsde/noise.hpp"

namespace mvsde {

double MeasureView::root_second_moment() const {
  // Clamp floating-point dust below zero; NaN passes through.
  return second_moment_ < 0.0 ? 0.0 : std::sqrt(second_moment_);
}

void DissipativityConstants::validate() const {
  if (!(kappa1 > kappa2 && kappa2 > 0)) throw ParameterError("need kappa1 > kappa2 > 0");
  if (!(kappa1_bar > kappa2_bar && kappa2_bar > 0)) {
    throw ParameterError("need kappa1_bar > kappa2_bar > 0");
  }
  if (!(rho > 0)) throw ParameterError("need rho > 0");
  if (!(L > 0)) throw ParameterError("need L > 0");
}

RateParams::RateParams(double rho, std::size_t d, double delta, double kappa1_bar,
                       double kappa2_bar)
    : RateParams(rho, d, delta) {
  if (!(kappa1_bar > kappa2_bar && kappa2_bar > 0)) {
    throw ParameterError("need kappa1_bar > kappa2_bar > 0");
  }
  const double upper = 1.0 - kappa2_bar / kappa1_bar;
  if (!(delta < upper)) {
    throw ParameterError("delta must lie in (0, " + std::to_string(upper) + ")");
  }
}

RateParams::RateParams(double rho, std::size_t d, double delta)
    : rho_(rho), d_(d), delta_(delta) {
  if (!(rho > 0)) throw ParameterError("rho must be positive");
  if (d == 0) throw ParameterError("dimension must be positive");
  if (!(delta > 0 && delta < 1)) throw ParameterError("delta must lie in (0, 1)");
}

double RateParams::eta_of(double rho, std::size_t d) {
  return rho / ((static_cast<double>(d) + 2.0) * (rho + 2.0));
}

double RateParams::eta_wedge_delta() const { return std::min(eta(), delta_); }

ModelSpec make_linear_model(std::string name, const LinearCoefficients& k) {
  ModelSpec spec;
  spec.name = std::move(name);
  spec.d = 1;
  spec.m = 1;
  spec.drift = [k](std::span<const double> x, const MeasureView& mu, std::span<double> out) {
    out[0] = k.a * x[0] + k.b * mu.mean()[0] + k.c;
  };
  spec.diffusion = [k](std::span<const double> x, const MeasureView& mu,
                       std::span<double> out) {
    out[0] = k.p * x[0] + k.q * mu.root_second_moment() + k.r;
  };
  spec.linear = k;
  return spec;
}

namespace {

ModelSpec example1() {
  ModelSpec spec;
  spec.name = "example1";
  spec.drift = [](std::span<const double> x, const MeasureView& mu, std::span<double> out) {
    out[0] = -(5.0 * x[0] + mu.mean()[0]);
  };
  spec.diffusion = [](std::span<const double> x, const MeasureView& mu,
                      std::span<double> out) {
    out[0] = x[0] - mu.root_second_moment() - 2.0;
  };
  spec.linear = LinearCoefficients{-5.0, -1.0, 0.0, 1.0, -1.0, -2.0};
  spec.moment_oracle = StationaryMoments{0.0, 1.0};
  // -2xm <= x^2 + m^2, (x - s - 2)^2 <= 3x^2 + 1.5 (s + 2)^2,
  // (s + 2)^2 <= 1.25 s^2 + 20, with rho = 0.2.
  spec.constants = DissipativityConstants{5.4, 3.25, 7.0, 3.0, 0.2, 36.0, 12.0};
  return spec;
}

ModelSpec example2() {
  ModelSpec spec;
  spec.name = "example2";
  spec.drift = [](std::span<const double> x, const MeasureView& mu, std::span<double> out) {
    out[0] = -2.0 * x[0] - mu.mean()[0];
  };
  spec.diffusion = [](std::span<const double>, const MeasureView& mu,
                      std::span<double> out) {
    out[0] = 2.0 - mu.root_second_moment();
  };
  spec.linear = LinearCoefficients{-2.0, -1.0, 0.0, 0.0, -1.0, 2.0};
  spec.gaussian_oracle = GaussianTarget{0.0, 4.0 / 9.0};
  spec.moment_oracle = StationaryMoments{0.0, 4.0 / 9.0};
  // -2xm <= x^2 + m^2 and (2 - s)^2 <= 4 + s^2 give kappa1 = 3,
  // kappa2 = 1 + (1 + rho), C = 4 (1 + rho). The monotonicity cross term
  // -2 dx dm <= dx^2 + dm^2 caps kappa1_bar at 3.
  spec.constants = DissipativityConstants{3.0, 2.4, 3.0, 2.0, 0.4, 5.6, 4.0};
  return spec;
}

ModelSpec ou() {
  ModelSpec spec = make_linear_model("ou", LinearCoefficients{-1.0, 0.0, 0.0, 0.0, 0.0, 1.0});
  spec.gaussian_oracle = GaussianTarget{0.0, 0.5};
  spec.moment_oracle = StationaryMoments{0.0, 0.5};
  spec.constants = DissipativityConstants{1.0, 0.5, 2.0, 1.0, 1.0, 2.0, 1.0};
  return spec;
}

ModelSpec zero() {
  ModelSpec spec;
  spec.name = "zero";
  spec.drift = [](std::span<const double>, const MeasureView&, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  spec.diffusion = spec.drift;
  spec.linear = LinearCoefficients{};
  return spec;
}

}  // namespace

std::vector<std::string> builtin_names() { return {"example1", "example2", "ou", "zero"}; }

ModelSpec builtin(const std::string& name) {
  if (name == "example1") return example1();
  if (name == "example2") return example2();
  if (name == "ou") return ou();
  if (name == "zero") return zero();
  throw ParameterError("unknown model '" + name + "'");
}

StationaryMoments stationary_moments_linear(const LinearCoefficients& k) {
  // Mean balance: (a + b) m + c = 0.
  if (k.a + k.b == 0.0) throw ParameterError("stationary mean is not determined (a + b = 0)");
  const double m = -k.c / (k.a + k.b);
  // Second-moment balance 2E[x f] + E[g^2] = 0 as a quadratic in sigma = sqrt(s):
  // (2a + p^2 + q^2) sigma^2 + 2q(r + p m) sigma + (2 b m^2 + 2 c m + r^2 + 2 p m r) = 0.
  const double qa = 2.0 * k.a + k.p * k.p + k.q * k.q;
  const double qb = 2.0 * k.q * (k.r + k.p * m);
  const double qc = 2.0 * k.b * m * m + 2.0 * k.c * m + k.r * k.r + 2.0 * k.p * m * k.r;

  std::vector<double> roots;
  if (qa == 0.0) {
    if (qb != 0.0) roots.push_back(-qc / qb);
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      // Numerically stable pair.
      const double t = -0.5 * (qb + (qb >= 0 ? sq : -sq));
      if (t != 0.0) {
        roots.push_back(t / qa);
        roots.push_back(qc / t);
      } else {
        roots.push_back(0.0);
      }
    }
  }
  std::vector<double> admissible;
  for (double sigma : roots) {
    if (sigma >= 0.0 && sigma * sigma >= m * m - 1e-15) {
      if (std::none_of(admissible.begin(), admissible.end(),
                       [&](double s) { return std::abs(s - sigma) < 1e-14; })) {
        admissible.push_back(sigma);
      }
    }
  }
  if (admissible.size() != 1) {
    throw ParameterError("stationary moment system has " + std::to_string(admissible.size()) +
                         " admissible roots; model is outside the oracle's scope");
  }
  return {m, admissible.front() * admissible.front()};
}

StationaryMoments stationary_moments_linear(const ModelSpec& model) {
  if (!model.linear) {
    throw ParameterError("model '" + model.name + "' has no affine coefficient descriptor");
  }
  return stationary_moments_linear(*model.linear);
}

namespace {

struct Coefficients {
  std::vector<double> f;
  std::vector<double> g;
};

Coefficients evaluate(const ModelSpec& model, std::span<const double> x,
                      const MeasureView& mu) {
  Coefficients c{std::vector<double>(model.d), std::vector<double>(model.d * model.m)};
  model.drift(x, mu, c.f);
  model.diffusion(x, mu, c.g);
  return c;
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double exact_w2(const MeasureView& mu1, const MeasureView& mu2) {
  if (!mu1.has_points() || !mu2.has_points()) {
    throw ParameterError("monotonicity check needs point measures");
  }
  if (mu1.dim() == 1) return w2_1d(*mu1.measure(), *mu2.measure());
  return w2_exact_small(*mu1.measure(), *mu2.measure());
}

}  // namespace

double check_dissipativity_pointwise(const ModelSpec& model, const DissipativityConstants& k,
                                     std::span<const double> x, const MeasureView& mu) {
  if (x.size() != model.d) throw DimensionError("state dimension mismatch");
  const auto c = evaluate(model, x, mu);
  double xf = 0.0;
  for (std::size_t i = 0; i < model.d; ++i) xf += x[i] * c.f[i];
  const double lhs = 2.0 * xf + (1.0 + k.rho) * squared_norm(c.g);
  const double rhs = -k.kappa1 * squared_norm(x) + k.kappa2 * mu.second_raw_moment() + k.C;
  return lhs - rhs;
}

double check_monotonicity_pointwise(const ModelSpec& model, const DissipativityConstants& k,
                                    std::span<const double> x1, std::span<const double> x2,
                                    const MeasureView& mu1, const MeasureView& mu2) {
  if (x1.size() != model.d || x2.size() != model.d) {
    throw DimensionError("state dimension mismatch");
  }
  const auto c1 = evaluate(model, x1, mu1);
  const auto c2 = evaluate(model, x2, mu2);
  double cross = 0.0, dx2 = 0.0, dg2 = 0.0;
  for (std::size_t i = 0; i < model.d; ++i) {
    const double dx = x1[i] - x2[i];
    cross += dx * (c1.f[i] - c2.f[i]);
    dx2 += dx * dx;
  }
  for (std::size_t i = 0; i < c1.g.size(); ++i) {
    dg2 += (c1.g[i] - c2.g[i]) * (c1.g[i] - c2.g[i]);
  }
  const double w2 = exact_w2(mu1, mu2);
  return 2.0 * cross + dg2 - (-k.kappa1_bar * dx2 + k.kappa2_bar * w2 * w2);
}

bool AssumptionReport::all_satisfied() const {
  return std::all_of(records.begin(), records.end(),
                     [](const ViolationRecord& r) { return r.max_violation <= 0.0; });
}

std::string AssumptionReport::summary() const {
  std::ostringstream os;
  os.precision(6);
  os << "sampled assumption check over " << n_samples << " draws\n";
  for (const auto& r : records) {
    os << "  " << r.inequality << ": max violation " << r.max_violation;
    if (r.max_violation > 0) {
      os << "  VIOLATED at x = (";
      for (std::size_t i = 0; i < r.witness_x.size(); ++i) os << (i ? ", " : "") << r.witness_x[i];
      os << ")";
      if (!r.witness_y.empty()) {
        os << ", y = (";
        for (std::size_t i = 0; i < r.witness_y.size(); ++i) {
          os << (i ? ", " : "") << r.witness_y[i];
        }
        os << ")";
      }
      os << ", mean_1 = " << r.witness_mean << ", mu(|.|^2) = " << r.witness_second_moment;
    } else {
      os << "  (no violation found; sampled evidence, not a proof)";
    }
    os << '\n';
  }
  return os.str();
}

AssumptionReport check_assumptions_sampled(const ModelSpec& model,
                                           const DissipativityConstants& k,
                                           const SamplerConfig& sampler,
                                           std::size_t n_samples, std::uint64_t seed) {
  if (sampler.measure_size == 0) throw ParameterError("sampler measure_size must be >= 1");
  const std::size_t d = model.d;
  const NoiseStream rng(seed, 1, StreamTag::kSampling);
  // Draw addresses: particle = sample index, block = role, step = point, component.
  auto uniform_vec = [&](std::uint32_t sample, std::uint32_t role, std::uint32_t point,
                         double radius) {
    std::vector<double> v(d);
    for (std::size_t c = 0; c < d; ++c) {
      v[c] = radius * (2.0 * rng.uniform(sample, role, point, static_cast<std::uint32_t>(c)) - 1.0);
    }
    return v;
  };
  auto random_measure = [&](std::uint32_t sample, std::uint32_t role, std::size_t size) {
    std::vector<double> flat;
    flat.reserve(size * d);
    for (std::size_t i = 0; i < size; ++i) {
      const auto p = uniform_vec(sample, role, static_cast<std::uint32_t>(i), sampler.measure_radius);
      flat.insert(flat.end(), p.begin(), p.end());
    }
    return EmpiricalMeasure::from_flat(d, flat);
  };

  AssumptionReport report;
  report.n_samples = n_samples;
  report.records.resize(4);
  report.records[0].inequality = "dissipativity";
  report.records[1].inequality = "monotonicity";
  report.records[2].inequality = "lipschitz";
  report.records[3].inequality = "growth";

  auto record = [](ViolationRecord& r, double v, std::span<const double> x,
                   std::span<const double> y, const EmpiricalMeasure& mu) {
    if (v > r.max_violation) {
      r.max_violation = v;
      r.witness_x.assign(x.begin(), x.end());
      r.witness_y.assign(y.begin(), y.end());
      r.witness_mean = mu.mean()[0];
      r.witness_second_moment = mu.second_raw_moment();
    }
  };

  for (std::size_t s = 0; s < n_samples; ++s) {
    const auto si = static_cast<std::uint32_t>(s);
    const auto x = uniform_vec(si, 0, 0, sampler.box_radius);
    const auto y = uniform_vec(si, 1, 0, sampler.box_radius);
    const std::size_t size =
        1 + std::min(sampler.measure_size - 1,
                     static_cast<std::size_t>(rng.uniform(si, 2, 0, 0) *
                                              static_cast<double>(sampler.measure_size)));
    const auto mu1 = random_measure(si, 3, size);
    const auto mu2 = random_measure(si, 4, size);

    record(report.records[0], check_dissipativity_pointwise(model, k, x, mu1), x, {}, mu1);
    record(report.records[1], check_monotonicity_pointwise(model, k, x, y, mu1, mu2), x, y, mu1);

    const auto cx = evaluate(model, x, mu1);
    const auto cy = evaluate(model, y, mu1);
    double df = 0.0, dg = 0.0, dx = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      df += (cx.f[i] - cy.f[i]) * (cx.f[i] - cy.f[i]);
      dx += (x[i] - y[i]) * (x[i] - y[i]);
    }
    for (std::size_t i = 0; i < cx.g.size(); ++i) dg += (cx.g[i] - cy.g[i]) * (cx.g[i] - cy.g[i]);
    const double lip = std::max(std::sqrt(df), std::sqrt(dg)) - k.L * std::sqrt(dx);
    record(report.records[2], lip, x, y, mu1);

    const double growth =
        squared_norm(cx.g) - k.L * (1.0 + squared_norm(x) + mu1.second_raw_moment());
    record(report.records[3], growth, x, {}, mu1);
  }
  return report;
}

}  // namespace mvsde
