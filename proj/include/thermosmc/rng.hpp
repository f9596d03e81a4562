#pragma once

#include <cstdint>
#include <random>

namespace thermosmc {

/// Generator used for every random draw in the library.
using Engine = std::mt19937_64;

/// What a derived stream is used for. Distinct purposes never share draws.
enum class StreamPurpose : std::uint64_t {
  init = 1,
  propagate = 2,
  resample = 3,
  data = 4,
  diagnostics = 5,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Counter-based stream derivation: the seed of a stream is a pure function of
/// (root, purpose, iteration, index), so draws never depend on which worker
/// or thread handles a particle.
class StreamFactory {
 public:
  explicit StreamFactory(std::uint64_t root) : root_(root) {}

  std::uint64_t root() const { return root_; }

  std::uint64_t stream_seed(StreamPurpose purpose, std::uint64_t iteration,
                            std::uint64_t index) const {
    std::uint64_t h = splitmix64(root_);
    h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
    h = splitmix64(h ^ iteration);
    h = splitmix64(h ^ index);
    return h;
  }

  Engine stream(StreamPurpose purpose, std::uint64_t iteration,
                std::uint64_t index) const {
    return Engine(stream_seed(purpose, iteration, index));
  }

 private:
  std::uint64_t root_;
};

}  // namespace thermosmc
