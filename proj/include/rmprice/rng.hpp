#pragma once

#include <cstdint>
#include <random>

namespace rmprice {

using Rng = std::mt19937_64;

// Named random streams derived from one run seed.
namespace stream {
inline constexpr std::uint64_t kMarket = 1;
inline constexpr std::uint64_t kRequests = 2;
inline constexpr std::uint64_t kReferee = 3;
inline constexpr std::uint64_t kAgentBase = 1000;
}  // namespace stream

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32)};
  return Rng(seq);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

template <class Int>
Int uniform_int(Rng& rng, Int lo, Int hi) {
  return std::uniform_int_distribution<Int>(lo, hi)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace rmprice
