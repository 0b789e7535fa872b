#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace chaincont {

// SplitMix64 finalizer. Used both as a seed-derivation function and as the
// counter-based generator behind lazily sampled paths: a variate is a pure
// function of its key, so sampling order never matters.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t hash_key(std::uint64_t stream, std::uint64_t a,
                                 std::uint64_t b, std::uint64_t c) noexcept {
  return hash_combine(hash_combine(hash_combine(stream, a), b), c);
}

// Uniform on the open interval (0, 1), 53 bits.
inline double unit_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal from a single key (Box-Muller, cosine branch).
inline double keyed_normal(std::uint64_t key) noexcept {
  const double u1 = unit_open(mix64(key));
  const double u2 = unit_open(mix64(key ^ 0xd1b54a32d192ed03ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Seed of the i-th replication / path derived from a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return hash_combine(mix64(master), index);
}

}  // namespace chaincont
