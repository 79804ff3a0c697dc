#include "gsink/rng.hpp"

namespace gsink {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t stream_hash(std::uint64_t seed, StreamTag tag,
                          std::initializer_list<std::uint64_t> counters) noexcept {
  std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(tag)));
  for (std::uint64_t c : counters) h = splitmix64(h ^ splitmix64(c + 0x632BE59BD9B4E019ull));
  return h;
}

double stream_uniform(std::uint64_t seed, StreamTag tag,
                      std::initializer_list<std::uint64_t> counters) noexcept {
  return static_cast<double>(stream_hash(seed, tag, counters) >> 11) * 0x1.0p-53;
}

std::uint64_t stream_below(std::uint64_t seed, StreamTag tag, std::uint64_t bound,
                           std::initializer_list<std::uint64_t> counters) noexcept {
  const auto k = static_cast<std::uint64_t>(stream_uniform(seed, tag, counters) * static_cast<double>(bound));
  return k < bound ? k : bound - 1;
}

}  // namespace gsink
