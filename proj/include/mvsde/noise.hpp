#pragma once

#include <array>
#include <cstdint>

namespace mvsde {

/// Philox4x32-10 block cipher (Salmon et al., SC'11). Stateless: the output
/// is a pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer, used to derive independent keys from a user seed.
std::uint64_t splitmix64(std::uint64_t x);

/// Stream tags for domain separation of keys derived from one seed.
enum class StreamTag : std::uint64_t {
  kIncrements = 0,
  kInitialState = 1,
  kProjections = 2,
  kSampling = 3,
};

/// Counter-based standard-normal source addressed by
/// (particle, block, inner step, component).
///
/// Identical addresses give identical values regardless of call order or
/// thread. With `aggregation = r > 1`, step m returns the normalised sum of
/// the base stream's steps m*r .. m*r+r-1 in the same block, i.e. the
/// Brownian increment of a step r times longer driven by the same path.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed, std::uint32_t aggregation = 1,
                       StreamTag tag = StreamTag::kIncrements);

  double normal(std::uint32_t particle, std::uint32_t block, std::uint32_t step,
                std::uint32_t component) const;

  /// Uniform on [0, 1) at the same addressing.
  double uniform(std::uint32_t particle, std::uint32_t block, std::uint32_t step,
                 std::uint32_t component) const;

  std::uint64_t seed() const { return seed_; }
  std::uint32_t aggregation() const { return aggregation_; }

 private:
  double base_normal(std::uint32_t particle, std::uint32_t block,
                     std::uint32_t step, std::uint32_t component) const;

  std::uint64_t seed_;
  std::uint32_t aggregation_;
  double inv_sqrt_aggregation_;
  std::array<std::uint32_t, 2> key_;
};

}  // namespace mvsde
