#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hanslens {

// Counter-based seed splitting: every random stream is addressed by
// (root seed, label, index), so reordering consumers never shifts a stream.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label,
                          std::uint64_t index = 0) noexcept;

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t root, std::string_view label,
                          std::uint64_t index = 0) {
  return Engine(derive_seed(root, label, index));
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace hanslens
