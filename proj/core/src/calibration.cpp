#include "carbmon/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "carbmon/errors.hpp"
#include "carbmon/rng.hpp"
#include "detail/text.hpp"

namespace carbmon {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !(alpha <= 0.5)) {
    raise(errc::invalid_alpha,
          "alpha must lie in (0, 0.5], got " + detail::round_trip(alpha));
  }
}

void check_horizon(int horizon) {
  if (horizon < 1) {
    raise(errc::invalid_horizon,
          "horizon must be a positive year count, got " +
              std::to_string(horizon));
  }
}

void check_replications(std::uint64_t replications) {
  if (replications == 0) {
    raise(errc::invalid_argument, "replication count must be positive");
  }
  if (replications > 0xFFFFFFFFull) {
    raise(errc::invalid_argument,
          "replication count exceeds the per-seed stream space");
  }
}

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

// One path maximum of the normalized cusum, m_b = max_t cumsum(eps)/f(t).
double path_maximum(std::uint64_t seed, std::uint64_t stream, int horizon,
                    std::span<const double> f_values) {
  GaussianStream gen(seed, StreamDomain::calibration, stream);
  double cum = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (int t = 1; t <= horizon; ++t) {
    cum += gen.normal();
    best = std::max(best, cum / f_values[std::size_t(t - 1)]);
  }
  return best;
}

// Simulates all replication maxima. Replication b always draws from stream
// b, so the result is bit-identical for every thread count.
std::vector<double> simulate_maxima(int horizon, std::string_view f_kind,
                                    std::uint64_t replications,
                                    std::uint64_t seed, int threads) {
  std::vector<double> f_values(static_cast<std::size_t>(horizon));
  for (int t = 1; t <= horizon; ++t) {
    f_values[std::size_t(t - 1)] = boundary_f(f_kind, t);
  }

  std::vector<double> maxima(static_cast<std::size_t>(replications));
  const int nthreads =
      int(std::min<std::uint64_t>(std::uint64_t(resolve_threads(threads)),
                                  replications));
  if (nthreads <= 1) {
    for (std::uint64_t b = 0; b < replications; ++b) {
      maxima[std::size_t(b)] = path_maximum(seed, b, horizon, f_values);
    }
    return maxima;
  }

  const std::uint64_t chunk =
      (replications + std::uint64_t(nthreads) - 1) / std::uint64_t(nthreads);
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(nthreads));
  for (int i = 0; i < nthreads; ++i) {
    const std::uint64_t lo = std::uint64_t(i) * chunk;
    const std::uint64_t hi = std::min(lo + chunk, replications);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      for (std::uint64_t b = lo; b < hi; ++b) {
        maxima[std::size_t(b)] = path_maximum(seed, b, horizon, f_values);
      }
    });
  }
  for (auto& th : pool) th.join();
  return maxima;
}

// Index (1-based) of the ceil((1-alpha) B) order statistic, computed through
// m = alpha B so that values representable as integers snap exactly instead
// of being pushed one rank up by floating-point excess.
std::uint64_t quantile_rank(double alpha, std::uint64_t replications) {
  const double m = alpha * double(replications);
  const double rounded = std::nearbyint(m);
  double dropped;
  if (std::fabs(m - rounded) <= 1e-9) {
    dropped = rounded;
  } else {
    dropped = std::floor(m);
  }
  std::uint64_t k = replications - std::uint64_t(dropped);
  if (k < 1) k = 1;
  if (k > replications) k = replications;
  return k;
}

struct CacheEntry {
  int horizon = 0;
  double alpha = 0.0;
  std::string f_kind;
  std::uint64_t replications = 0;
  std::uint64_t seed = 0;
  double c = 0.0;
};

bool parse_cache_line(std::string_view line, CacheEntry& entry) {
  std::size_t pos = 0;
  int seen = 0;
  while (pos <= line.size()) {
    const std::size_t comma = line.find(',', pos);
    const std::string_view field = line.substr(
        pos, (comma == std::string_view::npos ? line.size() : comma) - pos);
    const std::size_t eq = field.find('=');
    if (eq == std::string_view::npos) return false;
    const std::string_view key = field.substr(0, eq);
    const std::string_view value = field.substr(eq + 1);
    try {
      if (key == "T") {
        entry.horizon =
            int(detail::parse_long(value, errc::malformed_number, "cache"));
      } else if (key == "alpha") {
        entry.alpha =
            detail::parse_double(value, errc::malformed_number, "cache");
      } else if (key == "f") {
        entry.f_kind = std::string(value);
      } else if (key == "B") {
        entry.replications = std::uint64_t(
            detail::parse_long(value, errc::malformed_number, "cache"));
      } else if (key == "seed") {
        entry.seed = std::uint64_t(
            detail::parse_long(value, errc::malformed_number, "cache"));
      } else if (key == "c") {
        entry.c = detail::parse_double(value, errc::malformed_number, "cache");
      } else {
        return false;
      }
    } catch (const error&) {
      return false;
    }
    ++seen;
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return seen == 6;
}

std::string format_cache_line(const BoundarySpec& spec) {
  std::ostringstream out;
  out << "T=" << spec.horizon << ",alpha=" << detail::round_trip(spec.alpha)
      << ",f=" << spec.f_kind << ",B=" << spec.replications
      << ",seed=" << spec.seed << ",c=" << detail::g17(spec.c);
  return out.str();
}

}  // namespace

double boundary_f(std::string_view f_kind, int t) {
  if (t < 1) {
    raise(errc::non_positive_step,
          "boundary is defined for steps t >= 1, got " + std::to_string(t));
  }
  if (f_kind == "sqrt") return std::sqrt(double(t));
  raise(errc::invalid_argument,
        "unknown boundary family '" + std::string(f_kind) + "'");
}

bool f_kind_supports_indefinite(std::string_view) noexcept {
  // f(t)/sqrt(t) must diverge for the overall size to stay below one on an
  // open horizon. sqrt fails that test, and no shipped family passes it.
  return false;
}

double boundary_value(const BoundarySpec& spec, int t) {
  if (!spec.calibrated()) {
    raise(errc::not_calibrated, "boundary constant has not been calibrated");
  }
  return spec.c * boundary_f(spec.f_kind, t);
}

BoundarySpec calibrate(int horizon, double alpha, std::string_view f_kind,
                       std::uint64_t replications, std::uint64_t seed,
                       int threads) {
  check_horizon(horizon);
  check_alpha(alpha);
  check_replications(replications);
  boundary_f(f_kind, 1);  // validates the family name

  std::vector<double> maxima =
      simulate_maxima(horizon, f_kind, replications, seed, threads);
  const std::uint64_t k = quantile_rank(alpha, replications);
  std::nth_element(maxima.begin(), maxima.begin() + std::ptrdiff_t(k - 1),
                   maxima.end());

  BoundarySpec spec;
  spec.horizon = horizon;
  spec.alpha = alpha;
  spec.f_kind = std::string(f_kind);
  spec.c = maxima[std::size_t(k - 1)];
  spec.replications = replications;
  spec.seed = seed;
  return spec;
}

CriticalValueTable critical_value_table(int horizon,
                                        std::span<const double> alphas,
                                        int years, std::uint64_t replications,
                                        std::uint64_t seed, int start_year,
                                        int threads) {
  check_horizon(horizon);
  if (alphas.empty()) {
    raise(errc::invalid_argument, "at least one alpha row is required");
  }
  for (double a : alphas) check_alpha(a);
  if (years < 1 || years > horizon) {
    raise(errc::invalid_horizon,
          "table width must lie in [1, horizon], got " +
              std::to_string(years));
  }
  check_replications(replications);

  CriticalValueTable table;
  table.horizon = horizon;
  table.years = years;
  table.start_year = start_year;
  table.f_kind = "sqrt";
  table.replications = replications;
  table.seed = seed;
  table.alphas.assign(alphas.begin(), alphas.end());

  // One simulated max sample serves every alpha row.
  std::vector<double> maxima =
      simulate_maxima(horizon, table.f_kind, replications, seed, threads);
  std::sort(maxima.begin(), maxima.end());

  table.constants.reserve(alphas.size());
  table.cells.reserve(alphas.size());
  for (double a : alphas) {
    const std::uint64_t k = quantile_rank(a, replications);
    const double c = maxima[std::size_t(k - 1)];
    table.constants.push_back(c);
    std::vector<double> row(static_cast<std::size_t>(years));
    for (int t = 1; t <= years; ++t) {
      row[std::size_t(t - 1)] = c * boundary_f(table.f_kind, t);
    }
    table.cells.push_back(std::move(row));
  }
  return table;
}

std::optional<double> cache_lookup(const std::filesystem::path& file,
                                   int horizon, double alpha,
                                   std::string_view f_kind,
                                   std::uint64_t replications,
                                   std::uint64_t seed) {
  std::ifstream in(file);
  if (!in) return std::nullopt;
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view body = detail::trim_cr(line);
    if (body.empty()) continue;
    CacheEntry entry;
    if (!parse_cache_line(body, entry)) continue;
    if (entry.horizon == horizon && entry.alpha == alpha &&
        entry.f_kind == f_kind && entry.replications == replications &&
        entry.seed == seed) {
      return entry.c;
    }
  }
  return std::nullopt;
}

void cache_store(const std::filesystem::path& file, const BoundarySpec& spec) {
  if (!spec.calibrated()) {
    raise(errc::not_calibrated, "refusing to cache an uncalibrated boundary");
  }
  if (cache_lookup(file, spec.horizon, spec.alpha, spec.f_kind,
                   spec.replications, spec.seed)) {
    return;
  }
  std::ofstream out(file, std::ios::app);
  if (!out) {
    raise(errc::io_error, "cannot open cache file " + file.string());
  }
  out << format_cache_line(spec) << '\n';
  if (!out) {
    raise(errc::io_error, "cannot write cache file " + file.string());
  }
}

}  // namespace carbmon
