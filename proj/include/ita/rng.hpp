#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace ita {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Hierarchical seed derivation. Every (tag path) below a master seed maps to
/// an independent engine, so work can be split across threads without the
/// result depending on scheduling.
class SeedStream {
 public:
  constexpr explicit SeedStream(std::uint64_t master = 0) : state_(mix64(master)) {}

  constexpr SeedStream child(std::uint64_t tag) const {
    SeedStream s;
    s.state_ = mix64(state_ ^ mix64(tag + 0x632be59bd9b4e019ULL));
    return s;
  }

  constexpr SeedStream child(std::initializer_list<std::uint64_t> tags) const {
    SeedStream s = *this;
    for (auto t : tags) s = s.child(t);
    return s;
  }

  constexpr std::uint64_t value() const { return state_; }

  Rng rng() const { return Rng(state_); }

 private:
  std::uint64_t state_ = 0;
};

// Portable draws: the std distributions are implementation-defined, these are not.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Box-Muller, one value per call.
double normal01(Rng& rng);

}  // namespace ita
