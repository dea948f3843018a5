#pragma once

#include <cstdint>
#include <random>

namespace osmee {

// SplitMix64 finalizer (Steele, Lea & Flood 2014). Used purely as a seed
// scrambler so that nearby integer seeds produce unrelated engine states.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent substream for item `index` under a base seed. Each parallel
// work item (one observation, one replicate) gets its own engine, so results
// do not depend on scheduling or thread count. The base seed is scrambled
// before the index is added; otherwise base seeds b and b+1 would share all
// but one of their substreams.
inline std::mt19937_64 substream(std::uint64_t base, std::uint64_t index) {
    return std::mt19937_64(splitmix64(splitmix64(base) + index));
}

// Single-stream engine for sequential use.
inline std::mt19937_64 engine(std::uint64_t seed) {
    return std::mt19937_64(splitmix64(seed));
}

} // namespace osmee
