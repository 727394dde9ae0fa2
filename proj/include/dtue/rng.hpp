#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dtue {

// Deterministic helpers on top of mt19937_64. std::uniform_real_distribution and
// std::shuffle are implementation-defined, so every draw that must reproduce
// bit-identically across toolchains goes through these.

inline double uniform01(std::mt19937_64& eng) {
  // 53 random bits -> [0, 1)
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t uniform_below(std::mt19937_64& eng, std::uint64_t n) {
  // modulo bias is irrelevant here; determinism is what matters
  return eng() % n;
}

template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& eng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform_below(eng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace dtue
