#include "carbmon/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "carbmon/errors.hpp"
#include "carbmon/monitor.hpp"

namespace carbmon {

namespace {

void check_fraction(double v, double lo, double hi, bool hi_open,
                    const char* name) {
  const bool ok = v >= lo && (hi_open ? v < hi : v <= hi);
  if (!ok) {
    raise(errc::invalid_fraction,
          std::string(name) + " must lie in [" + std::to_string(lo) +
              (hi_open ? ", " : ", ") + std::to_string(hi) +
              (hi_open ? ")" : "]"));
  }
}

// Linear-interpolation quantile of a sorted sample.
double sorted_quantile(const std::vector<double>& x, double p) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (x.size() == 1) return x.front();
  const double pos = p * double(x.size() - 1);
  const std::size_t lo = std::size_t(pos);
  if (lo + 1 >= x.size()) return x.back();
  const double frac = pos - double(lo);
  return x[lo] + frac * (x[lo + 1] - x[lo]);
}

int run_one(const MonitorConfig& config, std::span<const double> y,
            int k_window, int horizon) {
  BudgetImbalanceSeries series;
  series.values.assign(y.begin(), y.begin() + k_window);
  MonitorState state = init_monitor(config, series);
  for (int t = 1; t <= horizon; ++t) {
    series.values.push_back(y[std::size_t(k_window + t - 1)]);
    const StepRecord record = step(state, series);
    if (record.reject) return t;
  }
  return 0;
}

}  // namespace

DgpParams dgp_preset(int id) {
  switch (id) {
    case 1:
      return {0.35, 0.72};
    case 2:
      return {0.175, 0.72};
    case 3:
      return {0.35, 0.36};
    default:
      raise(errc::invalid_argument,
            "unknown parameter preset " + std::to_string(id) +
                " (valid: 1, 2, 3)");
  }
}

std::vector<double> reported_path(double e_base, double g, int horizon) {
  if (horizon < 1) {
    raise(errc::invalid_horizon,
          "path length must be positive, got " + std::to_string(horizon));
  }
  if (!(e_base > 0.0)) {
    raise(errc::invalid_argument, "baseline emissions must be positive");
  }
  check_fraction(g, 0.0, 1.0, true, "abatement fraction g");
  std::vector<double> path(static_cast<std::size_t>(horizon));
  for (int t = 1; t <= horizon; ++t) {
    path[std::size_t(t - 1)] = e_base * std::pow(1.0 - g, double(t));
  }
  return path;
}

std::vector<double> actual_path(std::span<const double> reported, double m,
                                double e_base) {
  check_fraction(m, 0.0, 1.0, false, "misreporting parameter m");
  std::vector<double> path(reported.size());
  for (std::size_t i = 0; i < reported.size(); ++i) {
    path[i] = (1.0 - m) * reported[i] + m * e_base;
  }
  return path;
}

std::vector<double> misreporting_wedge(double e_base, double g, double m,
                                       int horizon) {
  if (horizon < 1) {
    raise(errc::invalid_horizon,
          "path length must be positive, got " + std::to_string(horizon));
  }
  if (!(e_base > 0.0)) {
    raise(errc::invalid_argument, "baseline emissions must be positive");
  }
  check_fraction(g, 0.0, 1.0, true, "abatement fraction g");
  check_fraction(m, 0.0, 1.0, false, "misreporting parameter m");
  std::vector<double> wedge(static_cast<std::size_t>(horizon));
  for (int t = 1; t <= horizon; ++t) {
    wedge[std::size_t(t - 1)] =
        m * e_base * (std::pow(1.0 - g, double(t)) - 1.0);
  }
  return wedge;
}

std::vector<double> simulate_ar1(double phi, double sigma, std::size_t length,
                                 GaussianStream& stream) {
  if (!(std::fabs(phi) < 1.0)) {
    raise(errc::non_stationary_parameter,
          "stationary simulation needs |phi| < 1");
  }
  if (sigma < 0.0) {
    raise(errc::invalid_argument, "sigma must be non-negative");
  }
  std::vector<double> u(length);
  double prev = sigma / std::sqrt(1.0 - phi * phi) * stream.normal();
  for (std::size_t t = 0; t < length; ++t) {
    prev = phi * prev + sigma * stream.normal();
    u[t] = prev;
  }
  return u;
}

PowerReport run_experiment(const ScenarioSpec& spec,
                           const BoundarySpec& boundary, int threads) {
  if (spec.replications == 0) {
    raise(errc::invalid_argument, "replication count must be positive");
  }
  if (spec.replications > 0xFFFFFFFFull) {
    raise(errc::invalid_argument,
          "replication count exceeds the per-seed stream space");
  }
  if (spec.k_window < 3) {
    raise(errc::invalid_argument,
          "initial window length must be at least 3, got " +
              std::to_string(spec.k_window));
  }
  if (spec.horizon < 1) {
    raise(errc::invalid_horizon,
          "monitoring horizon must be positive, got " +
              std::to_string(spec.horizon));
  }
  if (spec.tau_offset < 1) {
    raise(errc::invalid_argument,
          "break onset must be at least one step after the initial window");
  }
  if (!boundary.calibrated()) {
    raise(errc::not_calibrated,
          "experiment requires a calibrated boundary constant");
  }
  if (boundary.horizon != spec.horizon) {
    raise(errc::invalid_argument,
          "boundary was calibrated for horizon " +
              std::to_string(boundary.horizon) + ", scenario runs " +
              std::to_string(spec.horizon));
  }

  const std::vector<double> wedge =
      spec.m == 0.0 ? std::vector<double>(std::size_t(spec.horizon), 0.0)
                    : misreporting_wedge(spec.e_base, spec.g, spec.m,
                                         spec.horizon);

  MonitorConfig config;
  config.k_window = spec.k_window;
  config.boundary = boundary;
  config.p = 1;
  config.q = 0;
  config.gaussianity_check = false;

  const std::size_t total = std::size_t(spec.k_window) +
                            std::size_t(spec.horizon);
  std::vector<int> detected(std::size_t(spec.replications), 0);

  auto worker = [&](std::uint64_t lo, std::uint64_t hi) {
    std::vector<double> y(total);
    for (std::uint64_t b = lo; b < hi; ++b) {
      GaussianStream stream(spec.seed, StreamDomain::scenario, b);
      y = simulate_ar1(spec.phi, spec.sigma, total, stream);
      for (int j = spec.tau_offset; j <= spec.horizon; ++j) {
        y[std::size_t(spec.k_window + j - 1)] += wedge[std::size_t(j - 1)];
      }
      detected[std::size_t(b)] =
          run_one(config, y, spec.k_window, spec.horizon);
    }
  };

  int nthreads = threads;
  if (nthreads <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    nthreads = hw == 0 ? 1 : int(hw);
  }
  nthreads = int(std::min<std::uint64_t>(std::uint64_t(nthreads),
                                         spec.replications));
  if (nthreads <= 1) {
    worker(0, spec.replications);
  } else {
    const std::uint64_t chunk =
        (spec.replications + std::uint64_t(nthreads) - 1) /
        std::uint64_t(nthreads);
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(nthreads));
    for (int i = 0; i < nthreads; ++i) {
      const std::uint64_t lo = std::uint64_t(i) * chunk;
      const std::uint64_t hi = std::min(lo + chunk, spec.replications);
      if (lo >= hi) break;
      pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  PowerReport report;
  report.replications = spec.replications;
  report.detection_years = std::move(detected);

  std::vector<double> times;
  times.reserve(report.detection_years.size());
  for (int t : report.detection_years) {
    if (t > 0) times.push_back(double(t));
  }
  report.rejection_rate =
      double(times.size()) / double(spec.replications);
  if (times.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    report.mean_detection_time = nan;
    report.min_detection = nan;
    report.q25_detection = nan;
    report.median_detection = nan;
    report.q75_detection = nan;
    report.max_detection = nan;
    return report;
  }
  std::sort(times.begin(), times.end());
  double sum = 0.0;
  for (double v : times) sum += v;
  report.mean_detection_time = sum / double(times.size());
  report.min_detection = times.front();
  report.q25_detection = sorted_quantile(times, 0.25);
  report.median_detection = sorted_quantile(times, 0.5);
  report.q75_detection = sorted_quantile(times, 0.75);
  report.max_detection = times.back();
  return report;
}

}  // namespace carbmon
