#include "mvsde/noise.hpp"

#include <cmath>
#include <numbers>

#include "mvsde/errors.hpp"

namespace mvsde {
namespace {

constexpr std::uint32_t kMulA = 0xD2511F53;
constexpr std::uint32_t kMulB = 0xCD9E8D57;
constexpr std::uint32_t kWeylA = 0x9E3779B9;
constexpr std::uint32_t kWeylB = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53 random bits from two words, mapped to [0, 1).
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits =
      ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMulA, ctr[0], hi0, lo0);
    mulhilo(kMulB, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeylA;
    key[1] += kWeylB;
  }
  return ctr;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

NoiseStream::NoiseStream(std::uint64_t seed, std::uint32_t aggregation,
                         StreamTag tag)
    : seed_(seed), aggregation_(aggregation) {
  if (aggregation == 0) throw ParameterError("noise aggregation must be >= 1");
  inv_sqrt_aggregation_ = 1.0 / std::sqrt(static_cast<double>(aggregation));
  const std::uint64_t k =
      splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(tag)));
  key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

double NoiseStream::base_normal(std::uint32_t particle, std::uint32_t block,
                                std::uint32_t step, std::uint32_t component) const {
  const auto r = philox4x32({particle, block, step, component}, key_);
  // Box-Muller, cosine branch only so that one address maps to one normal.
  const double u1 = 1.0 - to_unit(r[0], r[1]);  // (0, 1]
  const double u2 = to_unit(r[2], r[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double NoiseStream::normal(std::uint32_t particle, std::uint32_t block,
                           std::uint32_t step, std::uint32_t component) const {
  if (aggregation_ == 1) return base_normal(particle, block, step, component);
  double sum = 0.0;
  const std::uint32_t first = step * aggregation_;
  for (std::uint32_t i = 0; i < aggregation_; ++i) {
    sum += base_normal(particle, block, first + i, component);
  }
  return sum * inv_sqrt_aggregation_;
}

double NoiseStream::uniform(std::uint32_t particle, std::uint32_t block,
                            std::uint32_t step, std::uint32_t component) const {
  const auto r = philox4x32({particle, block, step, component}, key_);
  return to_unit(r[0], r[1]);
}

}  // namespace mvsde
