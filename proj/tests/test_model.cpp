#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mvsde/errors.hpp"
#include "mvsde/model.hpp"

using namespace mvsde;

namespace {

double eval_drift(const ModelSpec& m, double x, const MeasureView& mu) {
  double out = 0;
  const double xs[] = {x};
  m.drift(xs, mu, std::span<double>(&out, 1));
  return out;
}

double eval_diffusion(const ModelSpec& m, double x, const MeasureView& mu) {
  double out = 0;
  const double xs[] = {x};
  m.diffusion(xs, mu, std::span<double>(&out, 1));
  return out;
}

ModelSpec custom_1d(std::function<double(double)> f, std::function<double(double)> g) {
  ModelSpec m;
  m.name = "custom";
  m.drift = [f](std::span<const double> x, const MeasureView&, std::span<double> out) { out[0] = f(x[0]); };
  m.diffusion = [g](std::span<const double> x, const MeasureView&, std::span<double> out) {
    out[0] = g(x[0]);
  };
  return m;
}

const std::vector<double> kOrigin{0.0};

}  // namespace

TEST(Builtin, CoefficientValues) {
  const auto delta0 = EmpiricalMeasure::dirac(kOrigin);
  const auto e2 = builtin("example2");
  EXPECT_EQ(eval_drift(e2, 1.0, delta0), -2.0);
  EXPECT_EQ(eval_diffusion(e2, 1.0, delta0), 2.0);
  const auto e1 = builtin("example1");
  EXPECT_EQ(eval_diffusion(e1, 0.0, delta0), -2.0);
  ASSERT_TRUE(e2.gaussian_oracle.has_value());
  EXPECT_EQ(e2.gaussian_oracle->mean, 0.0);
  EXPECT_DOUBLE_EQ(e2.gaussian_oracle->variance, 4.0 / 9.0);
  EXPECT_THROW(builtin("example3"), ParameterError);
}

TEST(Builtin, MomentDrivenAndDeterministic) {
  const auto e1 = builtin("example1");
  const auto mu = EmpiricalMeasure::from_flat(1, std::vector<double>{-1.0, 3.0});
  const double m[] = {1.0};
  const auto from_moments = MeasureView::from_moments(m, 5.0);
  // -(5*0.5 + 1), 0.5 - sqrt(5) - 2
  EXPECT_DOUBLE_EQ(eval_drift(e1, 0.5, mu), -3.5);
  EXPECT_DOUBLE_EQ(eval_diffusion(e1, 0.5, mu), 0.5 - std::sqrt(5.0) - 2.0);
  EXPECT_EQ(eval_drift(e1, 0.5, mu), eval_drift(e1, 0.5, from_moments));
  EXPECT_EQ(eval_diffusion(e1, 0.5, mu), eval_diffusion(e1, 0.5, from_moments));
}

TEST(MeasureView, RootOfNegativeDustIsZero) {
  const double m[] = {0.0};
  EXPECT_EQ(MeasureView::from_moments(m, -1e-17).root_second_moment(), 0.0);
}

TEST(Builtin, ShippedConstantsAreValid) {
  for (const auto& name : {"example1", "example2", "ou"}) {
    const auto m = builtin(name);
    ASSERT_TRUE(m.constants.has_value()) << name;
    EXPECT_NO_THROW(m.constants->validate()) << name;
  }
  EXPECT_FALSE(builtin("zero").constants.has_value());
}

TEST(StationaryMoments, Examples) {
  const auto s1 = stationary_moments_linear(builtin("example1"));
  EXPECT_NEAR(s1.mean, 0.0, 1e-12);
  EXPECT_NEAR(s1.second_moment, 1.0, 1e-12);
  const auto s2 = stationary_moments_linear(builtin("example2"));
  EXPECT_NEAR(s2.mean, 0.0, 1e-12);
  EXPECT_NEAR(s2.second_moment, 4.0 / 9.0, 1e-12);
  for (double r : {0.5, 1.0, 3.0}) {
    const auto s = stationary_moments_linear(LinearCoefficients{-1, 0, 0, 0, 0, r});
    EXPECT_NEAR(s.mean, 0.0, 1e-12);
    EXPECT_NEAR(s.second_moment, r * r / 2, 1e-12);
  }
}

TEST(StationaryMoments, BalanceResiduals) {
  // Substitute back: mean balance (a+b)m + c = 0, and with x ~ stationary,
  // 2E[x f] + E[g^2] = 0 where E[x^2] = s, E[x] = m and sigma = sqrt(s).
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    LinearCoefficients k{-2 - 2 * std::abs(u(rng)), u(rng), u(rng), 0.5 * u(rng), 0.5 * u(rng), u(rng)};
    StationaryMoments s{};
    try {
      s = stationary_moments_linear(k);
    } catch (const ParameterError&) {
      continue;
    }
    ++checked;
    const double m = s.mean, sec = s.second_moment, sig = std::sqrt(sec);
    EXPECT_NEAR((k.a + k.b) * m + k.c, 0.0, 1e-12);
    const double exf = k.a * sec + k.b * m * m + k.c * m;
    const double eg2 = k.p * k.p * sec + (k.q * sig + k.r) * (k.q * sig + k.r) + 2 * k.p * m * (k.q * sig + k.r);
    EXPECT_NEAR(2 * exf + eg2, 0.0, 1e-12 * std::max(1.0, sec));
    EXPECT_GE(sec, m * m - 1e-12);
  }
  EXPECT_GT(checked, 100);
}

TEST(StationaryMoments, Errors) {
  EXPECT_THROW(stationary_moments_linear(LinearCoefficients{1, -1, 0, 0, 0, 1}), ParameterError);
  // Anti-dissipative: 2a + p^2 > 0 leaves no admissible root.
  EXPECT_THROW(stationary_moments_linear(LinearCoefficients{1, 0, 0, 0, 0, 1}), ParameterError);
  ModelSpec nonlinear = custom_1d([](double x) { return -x * x * x; }, [](double) { return 1.0; });
  EXPECT_THROW(stationary_moments_linear(nonlinear), ParameterError);
}

TEST(RateParams, Eta) {
  EXPECT_DOUBLE_EQ(RateParams::eta_of(1.0, 1), 1.0 / 9.0);
  for (std::size_t d = 1; d <= 5; ++d) {
    for (double rho = 0.1; rho < 5; rho += 0.1) {
      EXPECT_LT(RateParams::eta_of(rho, d), RateParams::eta_of(rho + 0.1, d));
      EXPECT_GT(RateParams::eta_of(rho, d), RateParams::eta_of(rho, d + 1));
    }
  }
  const RateParams r(1.0, 1, 0.2, 4.0, 2.0);
  EXPECT_DOUBLE_EQ(r.eta_wedge_delta(), 1.0 / 9.0);
  EXPECT_DOUBLE_EQ(RateParams(1.0, 1, 0.05).eta_wedge_delta(), 0.05);
  EXPECT_THROW(RateParams(1.0, 1, 0.6, 4.0, 2.0), ParameterError);
  EXPECT_THROW(RateParams(0.0, 1, 0.2), ParameterError);
}

TEST(Dissipativity, PointwiseExamples) {
  const auto ou_like = custom_1d([](double x) { return -x; }, [](double) { return 0.0; });
  const DissipativityConstants k{2.0, 0.5, 2.0, 1.0, 1.0, 0.0, 1.0};
  const auto delta0 = EmpiricalMeasure::dirac(kOrigin);
  const std::vector<double> one{1.0};
  EXPECT_DOUBLE_EQ(check_dissipativity_pointwise(ou_like, k, one, delta0), 0.0);

  const auto anti = custom_1d([](double x) { return x; }, [](double) { return 0.0; });
  const std::vector<double> ten{10.0};
  EXPECT_GT(check_dissipativity_pointwise(anti, k, ten, delta0), 0.0);
}

TEST(Monotonicity, IdenticalArgumentsGiveZero) {
  const auto e2 = builtin("example2");
  const auto mu = EmpiricalMeasure::from_flat(1, std::vector<double>{0.3, -0.7});
  const std::vector<double> x{0.25};
  EXPECT_EQ(check_monotonicity_pointwise(e2, *e2.constants, x, x, mu, mu), 0.0);
}

TEST(Monotonicity, ZeroModelReportsSignHonestly) {
  const auto z = builtin("zero");
  const DissipativityConstants k{2.0, 1.0, 2.0, 1.0, 1.0, 1.0, 1.0};
  const auto mu1 = EmpiricalMeasure::dirac(kOrigin);
  const auto mu2 = EmpiricalMeasure::from_flat(1, std::vector<double>{3.0});
  const std::vector<double> a{0.0}, b{1.0};
  // 0 - (-2*1 + 1*9) = -7 <= 0
  EXPECT_DOUBLE_EQ(check_monotonicity_pointwise(z, k, a, b, mu1, mu2), -7.0);
  // 0 - (-2*1 + 0) = 2 > 0
  EXPECT_DOUBLE_EQ(check_monotonicity_pointwise(z, k, a, b, mu1, mu1), 2.0);
}

TEST(Monotonicity, NeedsPointMeasures) {
  const auto e2 = builtin("example2");
  const double m[] = {0.0};
  const auto view = MeasureView::from_moments(m, 1.0);
  const std::vector<double> x{0.0};
  EXPECT_THROW(check_monotonicity_pointwise(e2, *e2.constants, x, x, view, view), ParameterError);
}

TEST(AssumptionsSampled, ShippedConstantsHoldOnSamples) {
  for (const auto& name : {"example1", "example2", "ou"}) {
    const auto m = builtin(name);
    const auto report = check_assumptions_sampled(m, *m.constants, SamplerConfig{}, 10000, 1);
    ASSERT_EQ(report.records.size(), 4u);
    for (const auto& r : report.records) {
      EXPECT_LE(r.max_violation, 1e-9) << name << " " << r.inequality;
    }
    EXPECT_TRUE(report.all_satisfied()) << report.summary();
    EXPECT_NE(report.summary().find("not a proof"), std::string::npos);
  }
}

TEST(AssumptionsSampled, Deterministic) {
  const auto m = builtin("example2");
  const auto a = check_assumptions_sampled(m, *m.constants, SamplerConfig{}, 500, 4);
  const auto b = check_assumptions_sampled(m, *m.constants, SamplerConfig{}, 500, 4);
  EXPECT_EQ(a.summary(), b.summary());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].max_violation, b.records[i].max_violation);
  }
}

TEST(AssumptionsSampled, QuadraticDiffusionViolatesGrowth) {
  const auto m = custom_1d([](double x) { return -x; }, [](double x) { return x * x; });
  const DissipativityConstants k{2.0, 1.0, 2.0, 1.0, 1.0, 1.0, 10.0};
  SamplerConfig sampler;
  sampler.box_radius = 10.0;
  const auto report = check_assumptions_sampled(m, k, sampler, 10000, 2);
  const auto& growth = report.records[3];
  EXPECT_EQ(growth.inequality, "growth");
  EXPECT_GT(growth.max_violation, 0.0);
  EXPECT_GT(std::abs(growth.witness_x[0]), 9.0);
  EXPECT_FALSE(report.all_satisfied());
  EXPECT_NE(report.summary().find("VIOLATED"), std::string::npos);
}

TEST(AssumptionsSampled, ZeroModelDissipativityWithLargeConstant) {
  // f = g = 0: dissipativity reads 0 <= -k1 |x|^2 + k2 mu2 + C, which holds on
  // the sampled box once C >= k1 R^2. Monotonicity fails whenever the measure
  // term cannot absorb k1_bar |dx|^2, and the report says so.
  const auto z = builtin("zero");
  const DissipativityConstants k{1.0, 0.5, 1.0, 0.5, 1.0, 1.0, 1.0};
  SamplerConfig sampler;
  sampler.box_radius = 0.5;
  const auto report = check_assumptions_sampled(z, k, sampler, 2000, 3);
  EXPECT_LE(report.records[0].max_violation, 0.0);
  EXPECT_LE(report.records[2].max_violation, 0.0);
  EXPECT_LE(report.records[3].max_violation, 0.0);
  EXPECT_GT(report.records[1].max_violation, 0.0);
}
