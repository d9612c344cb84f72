#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fedda {

// Splittable seed derivation: every randomized concern (weight init, client
// sampling, batch shuffling, synthetic generation, ...) draws its seed from
// the root seed through a tagged splitmix chain. Adding a new concern never
// perturbs the streams of existing ones.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
  std::uint64_t h = splitmix64(root);
  for (char c : tag) h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t index) {
  return splitmix64(derive_seed(root, tag) ^ index);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t a,
                                 std::uint64_t b) {
  return splitmix64(derive_seed(root, tag, a) ^ splitmix64(b));
}

// Deterministic distributions on top of mt19937_64. The standard library's
// distribution objects are implementation-defined, so tests and outputs pin
// these instead.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

inline double normal01(std::mt19937_64& gen) {
  // Box-Muller; one value per call keeps the stream position obvious.
  double u1 = uniform01(gen);
  double u2 = uniform01(gen);
  while (u1 <= 0.0) u1 = uniform01(gen);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

template <typename T>
void shuffle_indices(std::vector<T>& v, std::mt19937_64& gen) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(gen() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace fedda
