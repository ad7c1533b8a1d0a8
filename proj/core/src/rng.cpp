#include "carbmon/rng.hpp"

#include <cmath>

namespace carbmon {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(std::array<std::uint32_t, 4>& x,
                       const std::array<std::uint32_t, 2>& k) noexcept {
  const std::uint64_t p0 = std::uint64_t(kMul0) * x[0];
  const std::uint64_t p1 = std::uint64_t(kMul1) * x[2];
  const std::uint32_t hi0 = std::uint32_t(p0 >> 32);
  const std::uint32_t lo0 = std::uint32_t(p0);
  const std::uint32_t hi1 = std::uint32_t(p1 >> 32);
  const std::uint32_t lo1 = std::uint32_t(p1);
  x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
}

// 53 random bits from two words, mapped strictly inside (0,1).
inline double to_unit(std::uint32_t a, std::uint32_t b) noexcept {
  const std::uint64_t bits = (std::uint64_t(a) << 32) | b;
  return (double(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(
    const std::array<std::uint32_t, 4>& counter,
    const std::array<std::uint32_t, 2>& key) noexcept {
  std::array<std::uint32_t, 4> x = counter;
  std::array<std::uint32_t, 2> k = key;
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    round_once(x, k);
  }
  return x;
}

GaussianStream::GaussianStream(std::uint64_t seed, StreamDomain domain,
                               std::uint64_t stream) noexcept
    : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
      stream_(std::uint32_t(stream)),
      domain_(static_cast<std::uint32_t>(domain)) {}

std::array<std::uint32_t, 4> GaussianStream::next_block() noexcept {
  const std::array<std::uint32_t, 4> counter = {
      std::uint32_t(block_), std::uint32_t(block_ >> 32), stream_, domain_};
  ++block_;
  return philox4x32(counter, key_);
}

double GaussianStream::uniform() {
  const auto b = next_block();
  return to_unit(b[0], b[1]);
}

double GaussianStream::normal() {
  if (have_cached_) {
    have_cached_ = false;
    return cached_;
  }
  const auto b = next_block();
  const double u1 = to_unit(b[0], b[1]);
  const double u2 = to_unit(b[2], b[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.14159265358979323846 * u2;
  cached_ = r * std::sin(theta);
  have_cached_ = true;
  return r * std::cos(theta);
}

}  // namespace carbmon
