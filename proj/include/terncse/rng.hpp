#pragma once

#include <cstdint>
#include <initializer_list>

namespace terncse {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Folds the parts through splitmix64. Seeds derived this way depend only on
// the listed values, never on scheduling order, so every process stream is
// reproducible from the master seed.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x5851f42d4c957f2dULL;
    for (std::uint64_t part : parts)
        h = splitmix64(h ^ part);
    return h;
}

}  // namespace terncse
