#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace gradients {

using Engine = std::mt19937_64;

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

/// Mixes a run seed with a path of stream indices (trial, user, ...) so every
/// unit of randomized work owns an independent, reproducible generator.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = detail::splitmix64(seed);
    for (auto v : path) h = detail::splitmix64(h ^ detail::splitmix64(v + 0x632be59bd9b4e019ULL));
    return h;
}

inline Engine make_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return Engine{derive_seed(seed, path)};
}

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Engine& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace gradients
