#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace hydrosac {

using Rng = std::mt19937_64;

/// Independent generator for (seed, index, stream); used so evaluation episodes
/// and policy comparisons see the same scenarios regardless of call order.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream), 0x68796472u};
  return Rng(seq);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Uniform draw on the open interval (0, 1).
inline double uniform_open01(Rng& rng) {
  return std::uniform_real_distribution<double>(std::nextafter(0.0, 1.0), 1.0)(rng);
}

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

std::string rng_state_to_string(const Rng& rng);
Rng rng_state_from_string(const std::string& state);

}  // namespace hydrosac
