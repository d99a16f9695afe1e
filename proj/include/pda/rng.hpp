#pragma once

#include <cstdint>
#include <random>

namespace pda {

/// Independent random streams for each subsystem. Adding a stream never
/// perturbs the others.
enum class Stream : std::uint64_t {
  kInitFeature = 1,
  kInitClassifier = 2,
  kInitDiscriminator = 3,
  kShuffleSource = 4,
  kShuffleTarget = 5,
  kAugment = 6,
  kGenerator = 7,
  kGradCheck = 8,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based key derivation: (seed, stream, counter) -> 64-bit key.
constexpr std::uint64_t derive_key(std::uint64_t seed, Stream stream, std::uint64_t counter = 0) {
  return mix64(mix64(mix64(seed) ^ static_cast<std::uint64_t>(stream)) ^ counter);
}

/// A generator for one (seed, stream, counter) cell.
inline std::mt19937_64 make_rng(std::uint64_t seed, Stream stream, std::uint64_t counter = 0) {
  return std::mt19937_64(derive_key(seed, stream, counter));
}

}  // namespace pda
