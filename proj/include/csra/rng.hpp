#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace csra {

// Finalizer of splitmix64; spreads seed material before it feeds the
// mersenne twister.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a over a string key. std::hash is not guaranteed stable across
// implementations; replication seeds must be, so we roll the classic one.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Independent random streams of one simulation run. Every consumer draws
// from its own stream so that adding draws in one place never perturbs
// the sequence seen by another.
enum class Stream : std::uint64_t {
    Placement = 1,
    Mobility,
    Activation,
    Arrivals,
    Fading,
    Noise,
    Exploration,
    Replay,
    Init,
};

inline std::mt19937_64 make_stream(std::uint64_t run_seed, Stream which) {
    const std::uint64_t mixed =
        splitmix64(run_seed ^ splitmix64(static_cast<std::uint64_t>(which)));
    return std::mt19937_64(mixed);
}

// Bernoulli draw on [0,1).
inline bool chance(double p, std::mt19937_64& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

}  // namespace csra
