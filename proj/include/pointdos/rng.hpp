#pragma once

#include <cstdint>

namespace pointdos {

/// Counter-based generator: every draw is a pure function of
/// (seed, sample, site), so ensembles are reproducible under any schedule.
/// Mixing is two rounds of splitmix64 over the packed key.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t sample, std::uint64_t site) {
  std::uint64_t h = mix64(seed ^ 0x243f6a8885a308d3ull);
  h = mix64(h ^ sample);
  h = mix64(h ^ (site + 0x13198a2e03707344ull));
  return h;
}

/// Uniform double in [0, 1), 53-bit resolution.
inline double counter_uniform(std::uint64_t seed, std::uint64_t sample, std::uint64_t site) {
  return double(counter_hash(seed, sample, site) >> 11) * 0x1.0p-53;
}

}  // namespace pointdos
