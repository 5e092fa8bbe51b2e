#pragma once

#include <cstdint>
#include <random>

namespace mscme {

/// Seeded random stream.
///
/// The engine is std::mt19937_64 (its output sequence is fixed by the
/// standard). The initial state is derived from (seed, stream) through
/// SplitMix64, so distinct stream ids give statistically independent
/// sequences. Uniform doubles are built from the top 53 bits by hand rather
/// than through std::uniform_real_distribution, whose algorithm is
/// implementation defined; golden values therefore port across toolchains.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed = 0, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform on (0, 1], safe for -log(u).
  double uniform_positive() { return 1.0 - uniform(); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double exponential(double rate);

  /// Independent child stream, e.g. one per trajectory.
  RandomSource split(std::uint64_t child) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace mscme
