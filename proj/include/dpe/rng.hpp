#pragma once

#include <cstdint>
#include <random>

namespace dpe {

// SplitMix64 finalizer; used to derive independent stream keys.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0) {
    return mix64(mix64(mix64(seed) ^ index) ^ (stream * 0xd1b54a32d192ed03ULL));
}

// Engine for one (seed, index, stream) counter. Draws from different keys are
// independent of evaluation order, which keeps parallel loops reproducible.
inline std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0) {
    return std::mt19937_64(stream_key(seed, index, stream));
}

namespace streams {
inline constexpr std::uint64_t variation = 1;
inline constexpr std::uint64_t tie_break = 2;
inline constexpr std::uint64_t split = 3;
inline constexpr std::uint64_t init = 4;
inline constexpr std::uint64_t programming = 5;
}  // namespace streams

}  // namespace dpe
