#pragma once

#include <cstdint>

namespace mongegap {

// splitmix64 step: advances the state and returns the next output.
std::uint64_t splitmix64(std::uint64_t& state);

// Stateless stream derivation: the seed for stream `index` under a master
// seed. Used everywhere a component needs an independent deterministic
// stream; the reserved indices are
//   0..3   dataset sampling (train-source, train-target, test-source,
//          test-target)
//   4      dataset structure (random moments, mixture components)
//   10     network initialization
//   11     training loop (batch indices, Hutchinson probes)
//   100+k  sweep repetition k
//   200+k  bench repetition k
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace mongegap
