// Reproducible random number streams: one independently seeded generator per
// (seed, stream) pair, so parallel Monte Carlo trials are deterministic
// regardless of scheduling.

#pragma once

#include <cstdint>
#include <random>

namespace cgd {

using Rng = std::mt19937_64;

/// Generator for logical stream `stream` under master seed `seed`.
Rng make_rng_stream(std::uint64_t seed, std::uint64_t stream);

}  // namespace cgd
