#pragma once

#include <cstdint>
#include <random>

namespace mpqdpg {

using Rng = std::mt19937_64;

// Independent named streams derived from one master seed, so that adding
// draws in one subsystem never shifts the sequence seen by another.
enum class Stream : std::uint64_t {
    network_init = 1,
    environment = 2,
    exploration = 3,
    replay = 4,
    actor_choice = 5,
};

inline Rng make_rng(std::uint64_t seed, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return Rng(seq);
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace mpqdpg
