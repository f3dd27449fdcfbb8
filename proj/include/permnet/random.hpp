#pragma once

#include <cstdint>
#include <random>

namespace permnet {

using Rng = std::mt19937_64;

/// Named sub-streams so each consumer of randomness can be reproduced on its
/// own from the run seed.
enum class Stream : std::uint64_t {
  Scenario = 1,
  Init = 2,
  Fading = 3,
  Shuffle = 4,
  Bandwidth = 5,
  TestScenario = 6,
};

/// Deterministic generator for (seed, stream, index).
inline Rng substream(std::uint64_t seed, Stream stream,
                     std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

}  // namespace permnet
