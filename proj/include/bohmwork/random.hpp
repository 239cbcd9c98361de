#pragma once

#include <cstdint>
#include <random>

namespace bohmwork {

/// Seed for an independent stream identified by (seed, stream, index). Streams
/// depend only on these labels, never on execution order.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// Per-sample generator. Uniform draws use the top 53 bits so results do not
/// depend on the standard library's distribution implementation.
class SampleRng {
 public:
  SampleRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
      : engine_(stream_seed(seed, stream, index)) {}

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  /// Standard normal by Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
};

/// Stream labels keep the draws of different consumers independent.
namespace streams {
inline constexpr std::uint64_t kInitialPosition = 1;
inline constexpr std::uint64_t kCoherentLabel = 2;
inline constexpr std::uint64_t kStratumJitter = 3;
}  // namespace streams

}  // namespace bohmwork
