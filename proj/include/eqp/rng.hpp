#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace eqp {

/// SplitMix64 finalizer. Used to key independent streams by (seed, index).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_key(std::uint64_t seed, std::uint64_t stream,
                                 std::int64_t index) {
  return mix64(mix64(mix64(seed) ^ stream) ^ static_cast<std::uint64_t>(index));
}

/// Counter-based uniform in [0, 1): the same (seed, stream, index) always
/// yields the same value, independent of access order.
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream,
                              std::int64_t index) {
  return static_cast<double>(hash_key(seed, stream, index) >> 11) * 0x1.0p-53;
}

/// Sequential generator for sampling work that does not need random access.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(hash_key(seed, stream, 0));
}

/// Seed for replica `r` of an ensemble rooted at `seed`.
constexpr std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t r) {
  return hash_key(seed, 0x5eedULL, static_cast<std::int64_t>(r));
}

}  // namespace eqp
