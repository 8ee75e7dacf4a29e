#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mvsde {

/// Inconsistent or missing vector dimensions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Out-of-range parameter (bad grid, bad quadrature size, empty input...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Problem too large for an exact algorithm.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// The Euler-Maruyama iterate became non-finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::int64_t particle, std::int64_t block, std::int64_t step,
                  double norm)
      : std::runtime_error("integrator diverged at particle " +
                           std::to_string(particle) + ", block " +
                           std::to_string(block) + ", inner step " +
                           std::to_string(step) + " (|z| = " +
                           std::to_string(norm) + ")"),
        particle(particle),
        block(block),
        step(step),
        norm(norm) {}

  std::int64_t particle;
  std::int64_t block;
  std::int64_t step;
  double norm;
};

}  // namespace mvsde
