#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mvsde/measures.hpp"
#include "mvsde/model.hpp"
#include "mvsde/noise.hpp"

namespace mvsde {

/// Two-scale time grid: anchors every `tau`, `M` Euler steps of size tau/M
/// in between.
struct AnchorGrid {
  double tau = 1.0;
  std::uint32_t M = 256;

  double delta() const { return tau / static_cast<double>(M); }

  /// Throws ParameterError unless tau > 0, M >= 1 and delta <= 1.
  void validate() const;
  /// M = tau / delta; throws unless the ratio is a positive integer.
  static AnchorGrid from_delta(double tau, double delta);
};

/// Distribution of the initial states.
struct InitialSampler {
  enum class Kind { kPoint, kGaussian, kList };
  Kind kind = Kind::kPoint;
  std::vector<double> point;               // kPoint; empty means the origin
  double mean = 0.0, variance = 1.0;       // kGaussian, i.i.d. per component
  std::vector<std::vector<double>> list;   // kList; particle j takes list[j % size]

  static InitialSampler at(std::vector<double> x0);
  static InitialSampler gaussian(double mean, double variance);
  static InitialSampler from_list(std::vector<std::vector<double>> points);

  std::vector<double> sample(std::size_t particle, std::size_t d, std::uint64_t seed) const;
};

struct SimConfig {
  AnchorGrid grid;
  double horizon_t = 1.0;
  std::size_t n_particles = 1;
  InitialSampler initial;
  std::uint64_t seed = 0;
  /// Anchor times at which the pooled measure is recorded. Empty means the
  /// horizon only.
  std::vector<double> snapshot_times;
  int workers = 1;

  /// Number of anchor blocks, horizon_t / tau. Throws when not integral.
  std::uint32_t n_blocks() const;
  void validate() const;
};

struct SnapshotDiagnostics {
  double t = 0.0;
  std::uint32_t k = 0;
  std::size_t n_points = 0;
  std::vector<double> mean;
  double second_raw_moment = 0.0;
  std::optional<double> w2_to_oracle;
  std::optional<double> jb_stat;
  std::optional<bool> jb_reject;
  std::uint64_t inner_steps = 0;  // Euler steps taken so far, all particles
  double wall_seconds = 0.0;
};

struct Snapshot {
  SnapshotDiagnostics diagnostics;
  EmpiricalMeasure measure;
};

struct SimOutput {
  std::size_t d = 1;
  double tau = 1.0;
  /// anchors[j] holds Z^j_{k tau} for k = 0..n_blocks, row-major (k, component).
  std::vector<std::vector<double>> anchors;
  std::vector<Snapshot> snapshots;

  std::size_t n_particles() const { return anchors.size(); }
  std::size_t n_anchors() const { return anchors.empty() ? 0 : anchors[0].size() / d; }
  std::span<const double> anchor(std::size_t particle, std::size_t k) const {
    return {anchors[particle].data() + k * d, d};
  }
  /// Uniform measure on all anchors of all particles.
  EmpiricalMeasure final_measure() const;
};

/// One Euler-Maruyama step z + f(z, mu) delta + g(z, mu) sqrt(delta) xi.
/// Throws DivergenceError (location fields -1) on a non-finite result.
std::vector<double> em_inner_step(std::span<const double> z, const MeasureView& mu,
                                  const ModelSpec& model, double delta,
                                  std::span<const double> xi);

/// Single self-interacting path. The measure seen during block k is the
/// uniform measure on anchors 0..k; n_particles must be 1. Uses
/// `NoiseStream(config.seed)` unless a stream is supplied. `path` selects the
/// particle index used for noise and initial-state addressing.
SimOutput run_wea(const ModelSpec& model, const SimConfig& config,
                  const NoiseStream* noise = nullptr, std::uint32_t path = 0);

/// N particles sharing the pooled anchor measure, updated in parallel within
/// each block on `config.workers` threads. Output does not depend on the
/// worker count.
SimOutput run_awea(const ModelSpec& model, const SimConfig& config,
                   const NoiseStream* noise = nullptr);

/// Serial reference for run_awea: steps all particles in lockstep, one inner
/// step at a time. Bit-identical to run_awea.
SimOutput run_awea_serial(const ModelSpec& model, const SimConfig& config,
                          const NoiseStream* noise = nullptr);

/// N independent Euler paths of the classical SDE with the measure argument
/// frozen at `fixed` for all time. Snapshots record the pooled anchors.
SimOutput run_frozen_measure_em(const ModelSpec& model, const MeasureView& fixed,
                                const SimConfig& config, const NoiseStream* noise = nullptr);

/// Same, with the measure frozen at `n_points` midpoint quantiles of a
/// 1-D Gaussian.
SimOutput run_frozen_measure_em(const ModelSpec& model, const GaussianTarget& target,
                                std::size_t n_points, const SimConfig& config,
                                const NoiseStream* noise = nullptr);

/// Columns: particle,k,t,x_1..x_d.
void write_anchors_csv(std::ostream& out, const SimOutput& output);
/// Columns: t,n_points,mean_1..mean_d,second_raw_moment and, when any
/// snapshot carries them, w2_to_oracle,jb_stat,jb_reject.
void write_snapshots_csv(std::ostream& out, const SimOutput& output);

}  // namespace mvsde
