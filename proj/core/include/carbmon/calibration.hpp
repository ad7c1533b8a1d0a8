#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace carbmon {

inline constexpr std::uint64_t kDefaultReplications = 100000;
inline constexpr std::uint64_t kDefaultSeed = 20210524;

// Proxy horizon for open-ended monitoring, usable once a boundary family
// whose f(t)/sqrt(t) diverges is registered (see f_kind_supports_indefinite).
inline constexpr int kIndefiniteProxyHorizon = 1000;

// Boundary description C_t = c * f(t). c is the Monte-Carlo calibrated
// constant for the configured horizon and size.
struct BoundarySpec {
  int horizon = 0;            // monitoring horizon T in years
  double alpha = 0.0;         // nominal overall size, in (0, 0.5]
  std::string f_kind = "sqrt";
  double c = 0.0;             // calibrated constant; 0 means not calibrated
  std::uint64_t replications = 0;
  std::uint64_t seed = 0;

  bool calibrated() const noexcept { return c > 0.0; }
};

// f("sqrt")(t) = sqrt(t). Unknown kinds raise InvalidArgument.
double boundary_f(std::string_view f_kind, int t);

// Whether the family is admissible for an indefinite horizon, which requires
// f(t)/sqrt(t) -> infinity. The shipped "sqrt" family does not qualify; the
// registry exists as the extension point for families that do.
bool f_kind_supports_indefinite(std::string_view f_kind) noexcept;

// C = c * f(t). Raises NotCalibrated and NonPositiveStep (t < 1).
double boundary_value(const BoundarySpec& spec, int t);

// Monte Carlo calibration: for b = 1..B simulate T iid standard Gaussians
// from stream b, form g_b(t) = (sum_{s<=t} eps_s) / f(t), record
// m_b = max_t g_b(t); c is the ceil((1-alpha) B)-th order statistic of the
// m_b sample. Bit-identical for a given (T, alpha, f, B, seed) regardless of
// threads. Raises InvalidAlpha (alpha outside (0, 0.5]) and InvalidHorizon.
BoundarySpec calibrate(int horizon, double alpha, std::string_view f_kind,
                       std::uint64_t replications = kDefaultReplications,
                       std::uint64_t seed = kDefaultSeed, int threads = 0);

// Critical-value table: one row per alpha, one column per monitored year,
// cell = c_alpha * f(t). Calendar labels run from start_year. All rows share
// one simulated max sample, so the whole table costs one calibration run.
struct CriticalValueTable {
  int horizon = 0;
  int years = 0;
  int start_year = 2020;
  std::string f_kind;
  std::uint64_t replications = 0;
  std::uint64_t seed = 0;
  std::vector<double> alphas;
  std::vector<double> constants;            // c per alpha row
  std::vector<std::vector<double>> cells;   // [row][t-1] = c * f(t)
};

CriticalValueTable critical_value_table(
    int horizon, std::span<const double> alphas, int years,
    std::uint64_t replications = kDefaultReplications,
    std::uint64_t seed = kDefaultSeed, int start_year = 2020,
    int threads = 0);

// Text cache of calibrated constants, one line per entry:
//   T=...,alpha=...,f=...,B=...,seed=...,c=<17 significant digits>
std::optional<double> cache_lookup(const std::filesystem::path& file,
                                   int horizon, double alpha,
                                   std::string_view f_kind,
                                   std::uint64_t replications,
                                   std::uint64_t seed);
void cache_store(const std::filesystem::path& file, const BoundarySpec& spec);

}  // namespace carbmon
