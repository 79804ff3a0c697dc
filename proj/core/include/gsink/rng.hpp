#pragma once

// Counter-based random streams. Every draw is a pure function of
// (seed, stream tag, counters), so independent consumers (activation, drops,
// delays, densities) never perturb each other's sequences.

#include <cstdint>
#include <initializer_list>

namespace gsink {

enum class StreamTag : std::uint64_t {
  activation = 1,
  pairwise_edge = 2,
  drop = 3,
  delay = 4,
  density = 5,
  sampling = 6,
  run_seed = 7,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Hash of a seed, a tag and up to a handful of counters.
std::uint64_t stream_hash(std::uint64_t seed, StreamTag tag,
                          std::initializer_list<std::uint64_t> counters) noexcept;

/// Uniform double in [0, 1) with 53 random bits.
double stream_uniform(std::uint64_t seed, StreamTag tag,
                      std::initializer_list<std::uint64_t> counters) noexcept;

/// Uniform integer in [0, bound) for 0 < bound < 2^53.
std::uint64_t stream_below(std::uint64_t seed, StreamTag tag, std::uint64_t bound,
                           std::initializer_list<std::uint64_t> counters) noexcept;

/// Sequential generator over one stream, for code that needs many draws
/// (sampling test vectors, random geometric graphs).
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, StreamTag tag, std::uint64_t substream = 0) noexcept
      : seed_(seed), tag_(tag), substream_(substream) {}

  double uniform() noexcept { return stream_uniform(seed_, tag_, {substream_, counter_++}); }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t bound) noexcept {
    return stream_below(seed_, tag_, bound, {substream_, counter_++});
  }

 private:
  std::uint64_t seed_;
  StreamTag tag_;
  std::uint64_t substream_;
  std::uint64_t counter_ = 0;
};

}  // namespace gsink
