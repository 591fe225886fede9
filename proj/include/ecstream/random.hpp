#pragma once

#include <cstdint>
#include <random>

namespace ecstream {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream); stream separates replications and uses.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

/// Uniform on [0, 1), same stream on every platform (unlike uniform_real_distribution).
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace ecstream
