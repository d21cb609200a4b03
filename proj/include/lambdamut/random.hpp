#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace lambdamut {

using engine = std::mt19937_64;

/// splitmix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a, used to turn fixture identifiers into stream coordinates.
constexpr std::uint64_t hash_id(std::string_view id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : id) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based stream seed for replicate `rep` of fixture `fixture`. For a
/// fixed (seed, fixture) the map rep -> seed is injective.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t fixture, std::uint64_t rep) {
  const std::uint64_t base = mix64(mix64(seed) ^ fixture);
  return mix64(base + rep);
}

inline engine make_stream(std::uint64_t seed, std::uint64_t fixture, std::uint64_t rep) {
  return engine(stream_seed(seed, fixture, rep));
}

/// Uniform on the open interval (0,1) with 53 random bits.
template <class URBG>
double uniform_open(URBG& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

template <class URBG>
double exponential(URBG& rng, double rate) {
  return -std::log(uniform_open(rng)) / rate;
}

/// Uniform integer in [0, bound).
template <class URBG>
std::size_t uniform_index(URBG& rng, std::size_t bound) {
  return std::uniform_int_distribution<std::size_t>(0, bound - 1)(rng);
}

template <class URBG>
long poisson(URBG& rng, double mean) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<long>(mean)(rng);
}

}  // namespace lambdamut
