#pragma once

#include <cstdint>

namespace spinshot {

/// Finalizer of the splitmix64 generator; bijective 64-bit mixer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Counter-based seed for one Monte Carlo cycle. Pure; the result depends only
/// on (master_seed, cycle_index), so any parallel schedule reproduces it.
constexpr std::uint64_t derive_cycle_seed(std::uint64_t master_seed, std::uint64_t cycle_index) {
    std::uint64_t h = splitmix64(master_seed ^ 0xA5A5A5A55A5A5A5AULL);
    h = splitmix64(h + cycle_index * 0x9E3779B97F4A7C15ULL);
    return splitmix64(h ^ cycle_index);
}

/// Independent substream tag within one cycle (charge chain, events, ...).
constexpr std::uint64_t derive_stream_seed(std::uint64_t cycle_seed, std::uint64_t stream_tag) {
    return splitmix64(cycle_seed ^ splitmix64(stream_tag));
}

}  // namespace spinshot
