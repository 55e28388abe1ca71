#pragma once

#include <cstdint>
#include <random>

namespace graphcpd {

using Rng = std::mt19937_64;

// splitmix64 mixing step; used to turn one master seed into decorrelated
// sub-seeds for the independent random streams of an experiment.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic sub-seed for stream `id` under `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t id) {
  return splitmix64(master ^ (0x9e3779b97f4a7c15ULL * (id + 1)));
}

}  // namespace graphcpd
