#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace privedm {

// Seeded runs are reproducible; they are meant for experiments and tests,
// not for protecting real inputs.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream seed for a named purpose (e.g. "party-a").
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view purpose) {
  std::uint64_t h = splitmix64(base);
  for (const char c : purpose) h = splitmix64(h ^ static_cast<unsigned char>(c));
  return h;
}

inline std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

// Uniform integer in [0, bound), bound >= 1. Plain rejection sampling rather
// than std::uniform_int_distribution, whose output differs between standard
// libraries; seeded transcripts stay portable.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  const std::uint64_t reject_below = (0 - bound) % bound;  // 2^64 mod bound
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= reject_below) return r % bound;
  }
}

}  // namespace privedm
