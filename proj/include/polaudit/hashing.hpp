#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace polaudit {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

// 64-bit FNV-1a. Stable across platforms, used for feature hashing and
// per-document seed derivation.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Mixes an integer into a running seed (splitmix64 finalizer).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value) {
  std::uint64_t z = seed ^ (value + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace polaudit
