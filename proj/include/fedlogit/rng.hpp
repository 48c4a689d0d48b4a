// Seed derivation helpers. Every stochastic component takes one explicit
// seed; sub-streams are derived with splitmix64 so that adding a new draw
// site never perturbs existing streams.
#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fedlogit {

// splitmix64 step (Steele, Lea, Flood 2014). Good avalanche, cheap, stable.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a 64-bit hash, used both for config hashes and for deriving
// sub-seeds from string tags.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic sub-seed for a named stream within a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
  return splitmix64(master ^ fnv1a64(tag));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace fedlogit
