#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pflat {

/// 64-bit FNV-1a; stable across platforms and runs.
constexpr std::uint64_t stable_hash(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for one purpose-tagged stream. Depends only on its arguments, so
/// streams can be regenerated in any order and on any thread.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                    std::uint64_t index) noexcept {
  return splitmix64(splitmix64(splitmix64(master) ^ stable_hash(tag)) ^ index);
}

using Rng = std::mt19937_64;

}  // namespace pflat
