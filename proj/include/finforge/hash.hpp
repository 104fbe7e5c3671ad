#pragma once

#include <cstdint>
#include <string_view>

namespace finforge {

// FNV-1a is the pinned 64-bit hash behind signatures and stub embeddings.
// Fixed algorithm identifier: "fnv1a64". Platform-default hashing is
// forbidden anywhere a fingerprint must reproduce across runs.
inline constexpr uint64_t kFnv64Offset = 0xcbf29ce484222325ull;
inline constexpr uint64_t kFnv64Prime = 0x100000001b3ull;

constexpr uint64_t fnv1a64(std::string_view data, uint64_t seed = kFnv64Offset) {
    uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= kFnv64Prime;
    }
    return h;
}

// splitmix64: seeded generator for synthetic fixtures and LSH planes.
constexpr uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Uniform double in [0, 1) from one splitmix64 draw.
inline double splitmix_unit(uint64_t& state) {
    return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

}  // namespace finforge
