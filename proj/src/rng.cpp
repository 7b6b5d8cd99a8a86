#include "vistra/rng.hpp"

namespace vistra {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view stream) {
    // FNV-1a over the stream name, mixed into the base seed. Stable across
    // platforms, unlike std::hash.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : stream) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(base ^ h);
}

std::mt19937 make_rng(std::uint64_t base, std::string_view stream) {
    return std::mt19937(static_cast<std::uint32_t>(derive_seed(base, stream) & 0xffffffffULL));
}

}  // namespace vistra
