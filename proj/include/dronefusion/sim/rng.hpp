#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dronefusion::sim {

/// FNV-1a over the stream name. std::hash is not stable across standard
/// library implementations, and stream seeding must be reproducible.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// splitmix64 finalizer: spreads related seeds across the whole state space.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// One independent generator per named stream, all derived from the master
/// seed. Toggling one sensor's noise never perturbs the other streams.
inline std::mt19937_64 make_stream(std::uint64_t master_seed, std::string_view name) {
  return std::mt19937_64(mix64(master_seed ^ fnv1a(name)));
}

}  // namespace dronefusion::sim
