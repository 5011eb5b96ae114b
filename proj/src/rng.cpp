#include "lp/rng.hpp"

namespace lp {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t trial, std::uint64_t index) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ mix64(trial + 0x632be59bd9b4e019ULL));
  h = mix64(h ^ mix64(index + 0x85157af5ULL));
  return h;
}

}  // namespace lp
