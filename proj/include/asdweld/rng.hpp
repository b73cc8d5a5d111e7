#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "asdweld/su2.hpp"

namespace asdweld {

/** Splitmix64 step; used to derive labeled substreams from one seed. */
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

/** All randomness flows from one 64-bit seed through named substreams. */
struct Rng {
  std::mt19937_64 gen;

  explicit Rng(std::uint64_t seed) : gen(seed) {}
  Rng(std::uint64_t seed, std::string_view label) {
    std::uint64_t s = seed ^ fnv1a(label);
    gen.seed(splitmix64(s));
  }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen);
  }
  double gaussian() { return std::normal_distribution<double>(0.0, 1.0)(gen); }
  std::uint64_t bits() { return gen(); }

  /** Haar-uniform SU(2). */
  Group group() {
    Group g{gaussian(), gaussian(), gaussian(), gaussian()};
    return g.normalize();
  }
};

}  // namespace asdweld
