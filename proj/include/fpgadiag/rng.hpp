#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fpgadiag {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Order-sensitive hash of a key tuple. Every random stream in the simulator
// is derived from one of these, so results never depend on execution order.
inline std::uint64_t mix_key(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

inline Engine keyed_engine(std::initializer_list<std::uint64_t> parts) {
    return Engine(mix_key(parts));
}

// Uniform in [0, 1) from a hash, 53-bit resolution.
inline double hash_unit(std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Domain tags keep streams for different purposes disjoint.
namespace stream {
inline constexpr std::uint64_t segment_delay = 0x5e6d;
inline constexpr std::uint64_t segment_jitter = 0x5e6a;
inline constexpr std::uint64_t pdn_field = 0x9d1f;
inline constexpr std::uint64_t local_field = 0x10ca;
inline constexpr std::uint64_t upsets = 0x0b5e;
inline constexpr std::uint64_t window = 0x3a11;
inline constexpr std::uint64_t placement = 0x91ac;
inline constexpr std::uint64_t bootstrap = 0xb007;
}  // namespace stream

}  // namespace fpgadiag
