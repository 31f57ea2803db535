#pragma once

#include <cstdint>
#include <random>

namespace zsd {

using Rng = std::mt19937_64;

/// splitmix64-style mixer; derives an independent stream seed from a base
/// seed and a salt so that sub-generators (per split, per image, per epoch)
/// never share state.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace zsd
