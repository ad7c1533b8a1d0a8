#pragma once

#include <array>
#include <cstdint>

namespace carbmon {

// Counter-based RNG built on the Philox4x32-10 bijection. Every (seed,
// domain, stream) triple yields an independent, reproducible sequence, which
// is what makes parallel Monte Carlo runs bit-identical regardless of thread
// count: replication b always consumes stream b, wherever it executes.

// One application of the 10-round Philox4x32 block function.
std::array<std::uint32_t, 4> philox4x32(
    const std::array<std::uint32_t, 4>& counter,
    const std::array<std::uint32_t, 2>& key) noexcept;

// Disjoint stream namespaces. Experiments that calibrate and simulate with
// the same seed must not share streams, so each consumer class gets its own
// domain word in the counter.
enum class StreamDomain : std::uint32_t {
  generic = 0,
  calibration = 1,
  scenario = 2,
  tests = 3,
};

// Deterministic stream of standard Gaussian (and uniform) variates.
// Each 128-bit Philox block provides two Box-Muller normals or two uniform
// doubles with 53 random bits each; uniforms are strictly inside (0,1).
// stream identifies the sub-stream within (seed, domain) and must be below
// 2^32 (callers that loop over replications validate their counts there).
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, StreamDomain domain,
                 std::uint64_t stream) noexcept;

  double normal();
  double uniform();

 private:
  std::array<std::uint32_t, 4> next_block() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_ = 0;
  std::uint32_t domain_ = 0;
  std::uint64_t block_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace carbmon
