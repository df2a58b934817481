#include "cgd/rng.hpp"

namespace cgd {

namespace {

// splitmix64; used only to spread (seed, stream) into seed material.
std::uint64_t mix(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng make_rng_stream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (stream * 0xda942042e4dd58b5ULL + 0x2545f4914f6cdd1dULL);
  std::seed_seq seq{static_cast<std::uint32_t>(mix(state)), static_cast<std::uint32_t>(mix(state)),
                    static_cast<std::uint32_t>(mix(state)), static_cast<std::uint32_t>(mix(state)),
                    static_cast<std::uint32_t>(mix(state)), static_cast<std::uint32_t>(mix(state)),
                    static_cast<std::uint32_t>(mix(state)), static_cast<std::uint32_t>(mix(state))};
  return Rng(seq);
}

}  // namespace cgd
