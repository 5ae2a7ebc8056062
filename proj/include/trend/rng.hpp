#pragma once

#include <cstdint>
#include <random>

namespace trend {

// splitmix64 finalizer; avalanches every input bit.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derives an independent substream seed from a root seed and a stream tag.
// One experiment seed fans out to env/annotator/init/permutation streams
// through this single scheme so runs stay reproducible.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    return mix64(root ^ mix64(stream ^ 0x632be59bd9b4e019ull));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

}  // namespace trend
