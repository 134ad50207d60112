#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace vpet {

using Rng = std::mt19937_64;

/// mt19937_64 keyed by a seed plus any number of stream identifiers.
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {}) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (auto s : stream) {
    words.push_back(static_cast<std::uint32_t>(s));
    words.push_back(static_cast<std::uint32_t>(s >> 32));
  }
  std::seed_seq keyed(words.begin(), words.end());
  return Rng(keyed);
}

}  // namespace vpet
