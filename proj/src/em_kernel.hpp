#pragma once

// Euler-Maruyama update shared by every integrator, so that all of them
// perform the same floating-point operations for a given (particle, block,
// step) address.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mvsde/errors.hpp"
#include "mvsde/model.hpp"
#include "mvsde/noise.hpp"

namespace mvsde::detail {

struct StepScratch {
  StepScratch(std::size_t d, std::size_t m) : f(d), g(d * m), xi(m) {}
  std::vector<double> f;
  std::vector<double> g;
  std::vector<double> xi;
};

inline double norm(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return std::sqrt(s);
}

/// z <- z + f(z, mu) delta + g(z, mu) xi sqrt(delta). Returns false when the
/// result is not finite.
inline bool em_step_inplace(std::span<double> z, const MeasureView& mu, const ModelSpec& model,
                            double delta, double sqrt_delta, StepScratch& s) {
  model.drift(z, mu, s.f);
  model.diffusion(z, mu, s.g);
  const std::size_t m = model.m;
  bool finite = true;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double gxi = 0.0;
    for (std::size_t c = 0; c < m; ++c) gxi += s.g[i * m + c] * s.xi[c];
    z[i] = z[i] + s.f[i] * delta + gxi * sqrt_delta;
    finite = finite && std::isfinite(z[i]);
  }
  return finite;
}

inline void draw_noise(const NoiseStream& noise, std::uint32_t particle, std::uint32_t block,
                       std::uint32_t step, StepScratch& s) {
  for (std::size_t c = 0; c < s.xi.size(); ++c) {
    s.xi[c] = noise.normal(particle, block, step, static_cast<std::uint32_t>(c));
  }
}

/// All M inner steps of block k for one particle, measure frozen at `mu`.
inline void advance_block(std::span<double> z, const MeasureView& mu, const ModelSpec& model,
                          std::uint32_t M, double delta, const NoiseStream& noise,
                          std::uint32_t particle, std::uint32_t block, StepScratch& s) {
  const double sqrt_delta = std::sqrt(delta);
  for (std::uint32_t step = 0; step < M; ++step) {
    draw_noise(noise, particle, block, step, s);
    if (!em_step_inplace(z, mu, model, delta, sqrt_delta, s)) {
      throw DivergenceError(particle, block, step, norm(z));
    }
  }
}

}  // namespace mvsde::detail
