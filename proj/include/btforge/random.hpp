#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace btforge {

using Rng = std::mt19937_64;

/// Seed for a named sub-stream of a root seed. Streams with different names
/// (or indices) are decorrelated, so adding a consumer of randomness does
/// not perturb the others.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index = 0) noexcept;

inline Rng make_stream(std::uint64_t root, std::string_view stream, std::uint64_t index = 0) {
  return Rng(derive_seed(root, stream, index));
}

/// Uniform integer in [0, n). n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double uniform_real(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline bool coin(Rng& rng, double p) { return uniform_real(rng) < p; }

}  // namespace btforge
