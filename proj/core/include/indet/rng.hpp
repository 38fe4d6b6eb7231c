#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "indet/text.hpp"

namespace indet {

/// All randomness flows from one root seed: per-stage, per-item streams are
/// derived so that results do not depend on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stage,
                                 std::string_view item = {}) {
  std::uint64_t h = fnv1a64(stage);
  h ^= fnv1a64(item) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  // splitmix64 finalizer over root ^ h
  std::uint64_t z = root ^ h;
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t root, std::string_view stage,
                                std::string_view item = {}) {
  return std::mt19937_64(derive_seed(root, stage, item));
}

inline std::size_t pick_index(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(rng);
}

}  // namespace indet
