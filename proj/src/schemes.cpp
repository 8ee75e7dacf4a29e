#include "mvsde/schemes.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <ostream>
#include <set>

#include "em_kernel.hpp"
#include "mvsde/errors.hpp"
#include "mvsde/normal.hpp"

namespace mvsde {

void AnchorGrid::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ParameterError("tau must be positive");
  if (M == 0) throw ParameterError("M must be at least 1");
  if (!(delta() <= 1.0)) throw ParameterError("step size tau/M must not exceed 1");
}

AnchorGrid AnchorGrid::from_delta(double tau, double delta) {
  if (!(delta > 0.0)) throw ParameterError("delta must be positive");
  if (delta > tau) throw ParameterError("delta must not exceed tau");
  const double ratio = tau / delta;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * rounded || rounded > 4294967295.0) {
    throw ParameterError("tau / delta must be a positive integer");
  }
  AnchorGrid g{tau, static_cast<std::uint32_t>(rounded)};
  g.validate();
  return g;
}

InitialSampler InitialSampler::at(std::vector<double> x0) {
  InitialSampler s;
  s.kind = Kind::kPoint;
  s.point = std::move(x0);
  return s;
}

InitialSampler InitialSampler::gaussian(double mean, double variance) {
  if (!(variance >= 0.0)) throw ParameterError("initial variance must be nonnegative");
  InitialSampler s;
  s.kind = Kind::kGaussian;
  s.mean = mean;
  s.variance = variance;
  return s;
}

InitialSampler InitialSampler::from_list(std::vector<std::vector<double>> points) {
  if (points.empty()) throw ParameterError("initial list must not be empty");
  InitialSampler s;
  s.kind = Kind::kList;
  s.list = std::move(points);
  return s;
}

std::vector<double> InitialSampler::sample(std::size_t particle, std::size_t d,
                                           std::uint64_t seed) const {
  switch (kind) {
    case Kind::kPoint:
      if (point.empty()) return std::vector<double>(d, 0.0);
      if (point.size() != d) throw DimensionError("initial point has wrong dimension");
      return point;
    case Kind::kGaussian: {
      const NoiseStream rng(seed, 1, StreamTag::kInitialState);
      std::vector<double> x(d);
      const double sd = std::sqrt(variance);
      for (std::size_t c = 0; c < d; ++c) {
        x[c] = mean + sd * rng.normal(static_cast<std::uint32_t>(particle), 0, 0,
                                      static_cast<std::uint32_t>(c));
      }
      return x;
    }
    case Kind::kList: {
      const auto& p = list[particle % list.size()];
      if (p.size() != d) throw DimensionError("initial point has wrong dimension");
      return p;
    }
  }
  throw ParameterError("unknown initial sampler");
}

std::uint32_t SimConfig::n_blocks() const {
  const double ratio = horizon_t / grid.tau;
  const double rounded = std::round(ratio);
  if (!(horizon_t > 0.0) || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, rounded)) {
    throw ParameterError("horizon t must be a positive multiple of tau");
  }
  return static_cast<std::uint32_t>(rounded);
}

void SimConfig::validate() const {
  grid.validate();
  const auto blocks = n_blocks();
  if (n_particles == 0) throw ParameterError("need at least one particle");
  if (workers < 1) throw ParameterError("workers must be >= 1");
  for (double s : snapshot_times) {
    const double ratio = s / grid.tau;
    const double rounded = std::round(ratio);
    if (s < 0.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, rounded) ||
        rounded > blocks) {
      throw ParameterError("snapshot time " + std::to_string(s) +
                           " is not an anchor time within the horizon");
    }
  }
}

EmpiricalMeasure SimOutput::final_measure() const {
  std::vector<double> flat;
  for (const auto& a : anchors) flat.insert(flat.end(), a.begin(), a.end());
  return EmpiricalMeasure::from_flat(d, flat);
}

std::vector<double> em_inner_step(std::span<const double> z, const MeasureView& mu,
                                  const ModelSpec& model, double delta,
                                  std::span<const double> xi) {
  if (!(delta > 0.0)) throw ParameterError("delta must be positive");
  if (z.size() != model.d) throw DimensionError("state dimension mismatch");
  if (xi.size() != model.m) throw DimensionError("noise dimension mismatch");
  detail::StepScratch s(model.d, model.m);
  std::copy(xi.begin(), xi.end(), s.xi.begin());
  std::vector<double> out(z.begin(), z.end());
  if (!detail::em_step_inplace(out, mu, model, delta, std::sqrt(delta), s)) {
    throw DivergenceError(-1, -1, -1, detail::norm(out));
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

// Anchor indices at which snapshots are taken.
std::set<std::uint32_t> snapshot_blocks(const SimConfig& config) {
  std::set<std::uint32_t> ks;
  if (config.snapshot_times.empty()) {
    ks.insert(config.n_blocks());
  } else {
    for (double t : config.snapshot_times) {
      ks.insert(static_cast<std::uint32_t>(std::round(t / config.grid.tau)));
    }
  }
  return ks;
}

class SnapshotRecorder {
 public:
  explicit SnapshotRecorder(const SimConfig& config)
      : blocks_(snapshot_blocks(config)), tau_(config.grid.tau), start_(Clock::now()) {}

  void maybe_record(std::uint32_t k, const EmpiricalMeasure& measure, std::uint64_t steps,
                    SimOutput& out) {
    if (!blocks_.contains(k)) return;
    SnapshotDiagnostics diag;
    diag.k = k;
    diag.t = static_cast<double>(k) * tau_;
    diag.n_points = measure.size();
    diag.mean.assign(measure.mean().begin(), measure.mean().end());
    diag.second_raw_moment = measure.second_raw_moment();
    diag.inner_steps = steps;
    diag.wall_seconds = std::chrono::duration<double>(Clock::now() - start_).count();
    out.snapshots.push_back(Snapshot{std::move(diag), measure});
  }

 private:
  std::set<std::uint32_t> blocks_;
  double tau_;
  Clock::time_point start_;
};

SimOutput make_output(const ModelSpec& model, const SimConfig& config) {
  SimOutput out;
  out.d = model.d;
  out.tau = config.grid.tau;
  out.anchors.resize(config.n_particles);
  const std::size_t n_anchor = static_cast<std::size_t>(config.n_blocks()) + 1;
  for (auto& a : out.anchors) a.reserve(n_anchor * model.d);
  return out;
}

std::vector<std::vector<double>> initial_states(const ModelSpec& model,
                                                const SimConfig& config) {
  std::vector<std::vector<double>> states(config.n_particles);
  for (std::size_t j = 0; j < config.n_particles; ++j) {
    states[j] = config.initial.sample(j, model.d, config.seed);
  }
  return states;
}

// Pushes the block-end states into the pooled measure and the anchor lists,
// in particle order.
void record_anchors(const std::vector<std::vector<double>>& states, EmpiricalMeasure* pooled,
                    SimOutput& out) {
  for (std::size_t j = 0; j < states.size(); ++j) {
    out.anchors[j].insert(out.anchors[j].end(), states[j].begin(), states[j].end());
    if (pooled) pooled->push(states[j]);
  }
}

EmpiricalMeasure initial_pooled(const std::vector<std::vector<double>>& states, std::size_t d) {
  std::vector<double> flat;
  for (const auto& s : states) flat.insert(flat.end(), s.begin(), s.end());
  return EmpiricalMeasure::from_flat(d, flat);
}

}  // namespace

SimOutput run_wea(const ModelSpec& model, const SimConfig& config, const NoiseStream* noise,
                  std::uint32_t path) {
  config.validate();
  if (config.n_particles != 1) throw ParameterError("run_wea simulates exactly one path");
  const NoiseStream own(config.seed);
  const NoiseStream& xi = noise ? *noise : own;

  SimOutput out = make_output(model, config);
  SnapshotRecorder snapshots(config);
  const std::uint32_t blocks = config.n_blocks();
  const std::uint32_t M = config.grid.M;
  const double delta = config.grid.delta();

  std::vector<double> z = config.initial.sample(path, model.d, config.seed);
  EmpiricalMeasure measure = EmpiricalMeasure::dirac(z);
  out.anchors[0] = z;
  snapshots.maybe_record(0, measure, 0, out);

  detail::StepScratch scratch(model.d, model.m);
  std::uint64_t steps = 0;
  for (std::uint32_t k = 0; k < blocks; ++k) {
    const MeasureView frozen(measure);
    detail::advance_block(z, frozen, model, M, delta, xi, path, k, scratch);
    steps += M;
    measure.push(z);
    out.anchors[0].insert(out.anchors[0].end(), z.begin(), z.end());
    snapshots.maybe_record(k + 1, measure, steps, out);
  }
  return out;
}

SimOutput run_awea(const ModelSpec& model, const SimConfig& config, const NoiseStream* noise) {
  config.validate();
  const NoiseStream own(config.seed);
  const NoiseStream& xi = noise ? *noise : own;

  SimOutput out = make_output(model, config);
  SnapshotRecorder snapshots(config);
  const std::uint32_t blocks = config.n_blocks();
  const std::uint32_t M = config.grid.M;
  const double delta = config.grid.delta();
  const auto n = static_cast<std::int64_t>(config.n_particles);

  auto states = initial_states(model, config);
  EmpiricalMeasure pooled_measure = initial_pooled(states, model.d);
  record_anchors(states, nullptr, out);
  snapshots.maybe_record(0, pooled_measure, 0, out);

  std::vector<std::exception_ptr> errors(config.n_particles);
  std::uint64_t steps = 0;
  for (std::uint32_t k = 0; k < blocks; ++k) {
    const MeasureView frozen(pooled_measure);
#pragma omp parallel num_threads(config.workers)
    {
      detail::StepScratch scratch(model.d, model.m);
#pragma omp for schedule(static)
      for (std::int64_t j = 0; j < n; ++j) {
        try {
          detail::advance_block(states[j], frozen, model, M, delta, xi,
                                static_cast<std::uint32_t>(j), k, scratch);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    steps += static_cast<std::uint64_t>(M) * config.n_particles;
    record_anchors(states, &pooled_measure, out);
    snapshots.maybe_record(k + 1, pooled_measure, steps, out);
  }
  return out;
}

SimOutput run_awea_serial(const ModelSpec& model, const SimConfig& config,
                          const NoiseStream* noise) {
  config.validate();
  const NoiseStream own(config.seed);
  const NoiseStream& xi = noise ? *noise : own;

  SimOutput out = make_output(model, config);
  SnapshotRecorder snapshots(config);
  const std::uint32_t blocks = config.n_blocks();
  const double delta = config.grid.delta();
  const double sqrt_delta = std::sqrt(delta);

  auto states = initial_states(model, config);
  EmpiricalMeasure pooled_measure = initial_pooled(states, model.d);
  record_anchors(states, nullptr, out);
  snapshots.maybe_record(0, pooled_measure, 0, out);

  detail::StepScratch scratch(model.d, model.m);
  std::uint64_t steps = 0;
  for (std::uint32_t k = 0; k < blocks; ++k) {
    const MeasureView frozen(pooled_measure);
    for (std::uint32_t step = 0; step < config.grid.M; ++step) {
      for (std::size_t j = 0; j < states.size(); ++j) {
        const auto pj = static_cast<std::uint32_t>(j);
        detail::draw_noise(xi, pj, k, step, scratch);
        if (!detail::em_step_inplace(states[j], frozen, model, delta, sqrt_delta, scratch)) {
          throw DivergenceError(pj, k, step, detail::norm(states[j]));
        }
        ++steps;
      }
    }
    record_anchors(states, &pooled_measure, out);
    snapshots.maybe_record(k + 1, pooled_measure, steps, out);
  }
  return out;
}

SimOutput run_frozen_measure_em(const ModelSpec& model, const MeasureView& fixed,
                                const SimConfig& config, const NoiseStream* noise) {
  config.validate();
  if (fixed.dim() != model.d) throw DimensionError("frozen measure has wrong dimension");
  const NoiseStream own(config.seed);
  const NoiseStream& xi = noise ? *noise : own;

  SimOutput out = make_output(model, config);
  SnapshotRecorder snapshots(config);
  const std::uint32_t blocks = config.n_blocks();
  const std::uint32_t M = config.grid.M;
  const double delta = config.grid.delta();
  const auto n = static_cast<std::int64_t>(config.n_particles);

  auto states = initial_states(model, config);
  EmpiricalMeasure anchors_measure = initial_pooled(states, model.d);
  record_anchors(states, nullptr, out);
  snapshots.maybe_record(0, anchors_measure, 0, out);

  std::vector<std::exception_ptr> errors(config.n_particles);
  std::uint64_t steps = 0;
  for (std::uint32_t k = 0; k < blocks; ++k) {
#pragma omp parallel num_threads(config.workers)
    {
      detail::StepScratch scratch(model.d, model.m);
#pragma omp for schedule(static)
      for (std::int64_t j = 0; j < n; ++j) {
        try {
          detail::advance_block(states[j], fixed, model, M, delta, xi,
                                static_cast<std::uint32_t>(j), k, scratch);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    steps += static_cast<std::uint64_t>(M) * config.n_particles;
    record_anchors(states, &anchors_measure, out);
    snapshots.maybe_record(k + 1, anchors_measure, steps, out);
  }
  return out;
}

SimOutput run_frozen_measure_em(const ModelSpec& model, const GaussianTarget& target,
                                std::size_t n_points, const SimConfig& config,
                                const NoiseStream* noise) {
  if (model.d != 1) throw DimensionError("Gaussian freezing is 1-D only");
  if (n_points == 0) throw ParameterError("need at least one quantile point");
  std::vector<double> q(n_points);
  const double sd = std::sqrt(target.variance);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n_points);
    q[i] = target.mean + sd * normal_quantile(u);
  }
  const auto measure = EmpiricalMeasure::from_flat(1, q);
  return run_frozen_measure_em(model, MeasureView(measure), config, noise);
}

void write_anchors_csv(std::ostream& out, const SimOutput& output) {
  const auto old = out.precision(17);
  out << "particle,k,t";
  for (std::size_t c = 0; c < output.d; ++c) out << ",x_" << (c + 1);
  out << '\n';
  for (std::size_t j = 0; j < output.n_particles(); ++j) {
    for (std::size_t k = 0; k < output.n_anchors(); ++k) {
      out << j << ',' << k << ',' << static_cast<double>(k) * output.tau;
      for (double v : output.anchor(j, k)) out << ',' << v;
      out << '\n';
    }
  }
  out.precision(old);
}

void write_snapshots_csv(std::ostream& out, const SimOutput& output) {
  const auto old = out.precision(17);
  const bool has_w2 = std::any_of(output.snapshots.begin(), output.snapshots.end(),
                                  [](const Snapshot& s) { return s.diagnostics.w2_to_oracle.has_value(); });
  const bool has_jb = std::any_of(output.snapshots.begin(), output.snapshots.end(),
                                  [](const Snapshot& s) { return s.diagnostics.jb_stat.has_value(); });
  out << "t,n_points";
  for (std::size_t c = 0; c < output.d; ++c) out << ",mean_" << (c + 1);
  out << ",second_raw_moment";
  if (has_w2) out << ",w2_to_oracle";
  if (has_jb) out << ",jb_stat,jb_reject";
  out << '\n';
  for (const auto& s : output.snapshots) {
    const auto& d = s.diagnostics;
    out << d.t << ',' << d.n_points;
    for (double m : d.mean) out << ',' << m;
    out << ',' << d.second_raw_moment;
    if (has_w2) {
      out << ',';
      if (d.w2_to_oracle) out << *d.w2_to_oracle;
    }
    if (has_jb) {
      out << ',';
      if (d.jb_stat) out << *d.jb_stat;
      out << ',';
      if (d.jb_reject) out << (*d.jb_reject ? 1 : 0);
    }
    out << '\n';
  }
  out.precision(old);
}

}  // namespace mvsde
