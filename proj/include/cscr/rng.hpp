#pragma once

#include <cstdint>
#include <random>

namespace cscr {

// Independent substreams derived from one master seed. Each subsystem
// (topology, fading, PU traces, MAC backoff, protocol randomness) gets its
// own stream so that adding draws in one place never perturbs another.
enum class RngStream : std::uint64_t {
  Topology = 1,
  Fading = 2,
  PuActivity = 3,
  Mac = 4,
  Protocol = 5,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, RngStream stream) {
  return std::mt19937_64(
      splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream))));
}

}  // namespace cscr
