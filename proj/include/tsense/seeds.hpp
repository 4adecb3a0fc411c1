#pragma once

#include <cstdint>
#include <random>

namespace tsense {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// seed_i = master xor splitmix64(i)
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return master ^ splitmix64(index);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(master, a), splitmix64(b) + 0x632be59bd9b4e019ULL);
}

/// Uniform double in [0, 1) from the top 53 bits. Spelled out so that the
/// value stream does not depend on the standard library's distribution code.
inline double unit_uniform(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

}  // namespace tsense
