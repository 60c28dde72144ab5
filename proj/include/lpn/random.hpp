#pragma once

#include <cstdint>
#include <random>

namespace lpn {

/// splitmix64 finalizer; used to derive well-mixed per-subsystem seeds from
/// one root seed so every random stream in a run is reproducible.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Deterministic sub-seed for stream `stream` of the root seed.
inline std::uint64_t seed_stream(std::uint64_t root, std::uint64_t stream) {
    return splitmix64(root ^ splitmix64(stream + 1));
}

using Rng = std::mt19937_64;

// std:: distributions are implementation defined, so draw doubles and
// bounded ints by hand to keep generated bytes identical across stdlibs.
inline double uniform_double(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniform_double(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_double(rng);
}

/// Uniform integer in [lo, hi], inclusive.
inline long uniform_int(Rng& rng, long lo, long hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<long>(rng() % span);
}

}  // namespace lpn
