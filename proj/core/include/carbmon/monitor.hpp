#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "carbmon/calibration.hpp"
#include "carbmon/flux_data.hpp"

namespace carbmon {

struct MonitorConfig {
  int k_window = 61;         // initial break-free window length K
  BoundarySpec boundary;     // calibrated boundary for (T, alpha)
  int p = 1;                 // null-model AR order
  int q = 0;                 // null-model MA order
  bool gaussianity_check = true;
};

enum class MonitorStatus { running, rejected, horizon_exhausted };

struct StepRecord {
  int year = 0;              // calendar year of the new observation
  std::size_t n = 0;         // vintage length at this step
  double phi_hat = 0.0;      // refit on the first K observations
  double sigma_hat = 0.0;
  double innovation = 0.0;   // standardized one-step residual, frozen
  double z = 0.0;            // running cusum of innovations
  double boundary = 0.0;     // C at this step
  bool reject = false;       // z <= -boundary
  bool gauss_warn = false;   // per-step residual battery outcome
};

// Result of the optional assumption check run at init time. Kept in memory
// only; the durable state format has no field for it.
struct InitDiagnostics {
  bool ran = false;
  bool jb_reject = false;
  bool ks_reject = false;
  bool ad_reject = false;

  bool any_reject() const noexcept { return jb_reject || ks_reject || ad_reject; }
};

// The sequential test: one initialization on a length-K vintage, then one
// step per new annual release. Each step refits the null model on the FIRST
// K observations of the incoming vintage (revisions to that window therefore
// move the refit), computes the newest standardized innovation from that
// same vintage, and accumulates it into Z. Innovations are frozen: a later
// vintage revising history never changes an already-recorded innovation.
// Rejection (Z <= -C) is terminal.
struct MonitorState {
  MonitorConfig config;
  int first_year = 0;        // first year of the initial window; 0 if unknown
  double init_phi = 0.0;     // fit stored at init time
  double init_sigma = 0.0;
  InitDiagnostics init_check;
  std::vector<StepRecord> steps;
  MonitorStatus status = MonitorStatus::running;
  int rejection_year = 0;
  std::vector<std::string> warnings;  // stationarity breaches etc.

  double z() const noexcept { return steps.empty() ? 0.0 : steps.back().z; }
};

// Raises WindowMismatch unless the series has exactly K observations.
MonitorState init_monitor(const MonitorConfig& config,
                          const BudgetImbalanceSeries& initial);
MonitorState init_monitor(const MonitorConfig& config, const Vintage& initial);

// Advances by one vintage, which must extend the known years by exactly one
// observation. Returns the recorded step. Raises WindowMismatch (wrong
// length or years), AlreadyTerminal (state not running), and propagates
// estimation errors.
StepRecord step(MonitorState& state, const BudgetImbalanceSeries& vintage);
StepRecord step(MonitorState& state, const Vintage& vintage);

// Human-readable table of all steps plus a summary line.
std::string status_report(const MonitorState& state);

// Durable state. Line-oriented text: header lines version=1, alpha=, T=, K=,
// f=, c= and status=, then a CSV body
//   year,n,phi_hat,sigma_hat,innovation,z,boundary,decision,gauss_flag
// with 17-significant-digit decimals, so reload is bit-exact. status values:
// running | rejected:<year> | horizon_exhausted.
void save_state(const MonitorState& state, std::ostream& out);
std::string save_state(const MonitorState& state);
MonitorState load_state(std::istream& in);
MonitorState load_state(const std::string& text);

}  // namespace carbmon
