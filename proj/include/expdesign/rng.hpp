#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace expdesign {

using Engine = std::mt19937_64;

// SplitMix64 finaliser; a bijective 64-bit mix.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed derived from a root seed and a path of stream indices, e.g.
/// (seed, setting, design, draw). Different paths give unrelated streams and
/// the result does not depend on the order in which streams are created.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t k : path) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

inline Engine make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {}) {
  return Engine(derive_seed(seed, path));
}

// Stream tags keep independent consumers of one seed apart.
namespace stream_tag {
inline constexpr std::uint64_t kDraw = 1;
inline constexpr std::uint64_t kPilot = 2;
inline constexpr std::uint64_t kSetting = 3;
inline constexpr std::uint64_t kNoise = 4;
inline constexpr std::uint64_t kDesign = 5;
inline constexpr std::uint64_t kNull = 6;
inline constexpr std::uint64_t kReplicate = 7;
inline constexpr std::uint64_t kObserved = 8;
}  // namespace stream_tag

}  // namespace expdesign
