#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vistra {

// Deterministic seed derivation: one experiment-level seed fans out into
// named streams (weight init, shuffling, augmentation, export ids) so that
// consuming randomness in one stream never perturbs another.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::string_view stream);
std::mt19937 make_rng(std::uint64_t base, std::string_view stream);

}  // namespace vistra
