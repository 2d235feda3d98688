#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sphere_cbo {

using Rng = std::mt19937_64;

/// Builds an independent stream from a master seed and a list of stream keys
/// (run index, agent index, iteration, ...). Equal keys give equal streams.
inline Rng derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys = {}) {
  // splitmix64 finalizer folded over the keys
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  for (std::uint64_t k : keys) h = mix(h ^ mix(k));
  return Rng(h);
}

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

inline double uniform01(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng);
}

}  // namespace sphere_cbo
