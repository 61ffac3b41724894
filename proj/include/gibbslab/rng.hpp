#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace gibbs {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view bytes,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Named, indexed sub-stream of a master seed. Streams with different
/// (name, index) pairs are statistically independent for practical purposes
/// and do not depend on the order in which they are created.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                                 std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(master ^ fnv1a(stream));
  return splitmix64(h + splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Rng make_stream(std::uint64_t master, std::string_view stream,
                       std::uint64_t index = 0) {
  return Rng(derive_seed(master, stream, index));
}

inline double uniform01(Rng& rng) {
  // 53 random bits, never returns 1.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Box–Muller on our own uniforms, so streams are identical across standard
/// library implementations.
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  if (u1 <= 0.0) u1 = 0x1.0p-60;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

}  // namespace gibbs
