#include "mscme/rng.hpp"

#include <array>
#include <cmath>

namespace mscme {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

using StateWords = std::array<std::uint64_t, std::mt19937_64::state_size>;

// Seed sequence handing precomputed words to mt19937_64::seed. The engine
// asks for 32-bit values, so every word is split in two halves.
struct WordSeq {
  using result_type = std::uint32_t;
  const StateWords* w;
  template <class It>
  void generate(It b, It e) {
    std::size_t i = 0;
    for (; b != e; ++b, ++i) {
      const std::uint64_t v = (*w)[(i / 2) % w->size()];
      *b = static_cast<std::uint32_t>(i % 2 ? v >> 32 : v);
    }
  }
};

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  std::uint64_t mixed = splitmix64(s);
  std::uint64_t t = stream ^ 0x5851f42d4c957f2dULL;
  mixed ^= splitmix64(t);
  // Fill the whole mt19937_64 state (312 words) from SplitMix64 so that
  // nearby seeds do not give correlated first outputs.
  std::mt19937_64 engine;
  StateWords words{};
  for (auto& w : words) w = splitmix64(mixed);
  WordSeq seq{&words};
  engine.seed(seq);
  return engine;
}

}  // namespace

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

double RandomSource::exponential(double rate) { return -std::log(uniform_positive()) / rate; }

RandomSource RandomSource::split(std::uint64_t child) const {
  std::uint64_t s = stream_ * 0x100000001b3ULL + child + 1;
  return RandomSource(seed_, splitmix64(s));
}

}  // namespace mscme
