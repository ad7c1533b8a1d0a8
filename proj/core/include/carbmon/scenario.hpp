#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "carbmon/calibration.hpp"
#include "carbmon/rng.hpp"

namespace carbmon {

// Size/power experiment description. The null process is a zero-mean AR(1)
// with parameters (phi, sigma); under misreporting the observed imbalance
// picks up the deterministic wedge between reported and actual emissions
// from the first monitored year onward (tau = K + tau_offset).
struct ScenarioSpec {
  double phi = 0.35;
  double sigma = 0.72;
  int k_window = 61;
  int horizon = 30;
  double alpha = 0.05;
  double g = 0.0692;      // annual abatement fraction of reported emissions
  double m = 0.0;         // misreporting parameter in [0, 1]
  double e_base = 9.7;    // baseline-year emissions level, GtC/yr
  int tau_offset = 1;     // steps after K at which the break starts
  std::uint64_t replications = 10000;
  std::uint64_t seed = kDefaultSeed;
};

// Parameter presets for the simulation experiments: 1 = (0.35, 0.72) as
// estimated on the bundled data; 2 = phi halved; 3 = sigma halved.
struct DgpParams {
  double phi = 0.0;
  double sigma = 0.0;
};
DgpParams dgp_preset(int id);

// Reported emissions E*_t = e_base (1-g)^t, t = 1..horizon.
// Raises InvalidFraction unless g is in [0, 1).
std::vector<double> reported_path(double e_base, double g, int horizon);

// Actual emissions E_t = (1-m) E*_t + m e_base.
// Raises InvalidFraction unless m is in [0, 1].
std::vector<double> actual_path(std::span<const double> reported, double m,
                                double e_base);

// Wedge xi_t = E*_t - E_t = m (E*_t - e_base) <= 0; identically zero when
// m = 0.
std::vector<double> misreporting_wedge(double e_base, double g, double m,
                                       int horizon);

// Stationary zero-mean AR(1): u_t = phi u_{t-1} + sigma eps_t with u_0 drawn
// from N(0, sigma^2 / (1-phi^2)). Returns u_1..u_length. Raises
// NonStationaryParameter unless |phi| < 1.
std::vector<double> simulate_ar1(double phi, double sigma, std::size_t length,
                                 GaussianStream& stream);

struct PowerReport {
  std::uint64_t replications = 0;
  double rejection_rate = 0.0;
  // Detection times in years since monitoring start (first monitored year
  // = 1), among rejecting replications only; NaN when nothing rejected.
  double mean_detection_time = 0.0;
  double min_detection = 0.0;
  double q25_detection = 0.0;
  double median_detection = 0.0;
  double q75_detection = 0.0;
  double max_detection = 0.0;
  std::vector<int> detection_years;  // per replication; 0 = no rejection
};

// Runs the full monitoring pipeline per replication: simulate the AR(1)
// imbalance over K + T years, add the wedge from tau on, then step the
// monitor over synthetic vintages without revisions. Deterministic for a
// given spec regardless of threads.
PowerReport run_experiment(const ScenarioSpec& spec,
                           const BoundarySpec& boundary, int threads = 0);

}  // namespace carbmon
