#pragma once

#include <cstdint>

namespace ksb {

/// splitmix64: counter-based, used to derive independent per-run seeds and
/// reproducible phases.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double uniform01(std::uint64_t& state) {
    return (splitmix64(state) >> 11) * 0x1.0p-53;
}

}  // namespace ksb
