#include "mongegap/rng.hpp"

namespace mongegap {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t state = master + index * 0x9E3779B97F4A7C15ULL;
  std::uint64_t fresh = state;
  return splitmix64(fresh);
}

}  // namespace mongegap
