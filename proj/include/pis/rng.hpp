#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "pis/core.hpp"

namespace pis {

/// Named substreams. Every random draw in the simulator comes from exactly one of these, so
/// toggling a subsystem never shifts another subsystem's draws.
enum class Stream : std::uint32_t {
  Placement = 1,
  Environment = 2,
  Mobility = 3,
  Fading = 4,
  Sampling = 5,
  Policy = 6,
  Bench = 7,
};

/// A seeded 64-bit Mersenne Twister plus the distributions the library draws from.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0) : engine_(seed) {}
  explicit RandomStream(std::seed_seq& seq) : engine_(seq) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(engine_); }
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform point in the disk of the given radius about `center`.
  Vec2 uniform_in_disk(Vec2 center, double radius) {
    const double rho = radius * std::sqrt(uniform());
    const double theta = 2.0 * kPi * uniform();
    return {center.x + rho * std::cos(theta), center.y + rho * std::sin(theta)};
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Derives an independent stream from the master seed, a stream tag and up to two indices
/// (typically time step and entity id).
inline RandomStream derive_stream(std::uint64_t master, Stream tag, std::uint64_t a = 0,
                                  std::uint64_t b = 0) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(master), hi(master), static_cast<std::uint32_t>(tag), lo(a), hi(a), lo(b), hi(b)};
  return RandomStream(seq);
}

}  // namespace pis
