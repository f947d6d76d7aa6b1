#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qpon {

// Stream derivation: every block / restart / property draw gets its own
// engine seeded through splitmix64, so work items can run in any order
// (or on any thread) and still reproduce bit-identically.
inline constexpr std::string_view kRngName = "splitmix64/mt19937_64";

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic sub-stream seed for work item `index` under `seed`.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed ^ (0xd1b54a32d192ed03ULL * (index + 1));
    return splitmix64(s);
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64(derive_stream_seed(seed, index));
}

}  // namespace qpon
