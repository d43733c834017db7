#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace salrgb {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable across platforms and runs, unlike std::hash.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL));
}

// Per-record seed: the same (global seed, id, epoch) always yields the same
// stream, so loader scheduling cannot change augmentation.
constexpr std::uint64_t record_seed(std::uint64_t global_seed, std::string_view id,
                                    std::uint64_t epoch) {
  return mix_seed(mix_seed(global_seed, fnv1a64(id)), epoch);
}

}  // namespace salrgb
