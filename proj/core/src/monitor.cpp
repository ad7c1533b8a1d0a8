#include "carbmon/monitor.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "carbmon/arma.hpp"
#include "carbmon/diagnostics.hpp"
#include "carbmon/errors.hpp"
#include "detail/text.hpp"

namespace carbmon {

namespace {

constexpr std::string_view kCsvHeader =
    "year,n,phi_hat,sigma_hat,innovation,z,boundary,decision,gauss_flag";

struct WindowFit {
  std::vector<double> phi;
  std::vector<double> psi;
  double phi_lead = 0.0;
  double sigma = 0.0;
  std::vector<double> std_residuals;
  bool stationarity_warning = false;
};

// Refit of the null model on the first K observations. The AR(1) default
// goes through the closed-form estimator so that monitor output is
// bit-identical to fit_ar1.
WindowFit fit_window(const MonitorConfig& config,
                     std::span<const double> window) {
  WindowFit out;
  if (config.p == 1 && config.q == 0) {
    Ar1Fit fit = fit_ar1(window);
    out.phi = {fit.phi};
    out.phi_lead = fit.phi;
    out.sigma = fit.sigma;
    out.std_residuals = std::move(fit.residuals);
    out.stationarity_warning = fit.stationarity_warning;
    return out;
  }
  ArmaFit fit = fit_arma(window, config.p, config.q);
  out.phi = std::move(fit.phi);
  out.psi = std::move(fit.psi);
  out.phi_lead = out.phi.empty() ? 0.0 : out.phi.front();
  out.sigma = fit.sigma;
  out.std_residuals = arma_innovations(window, out.phi, out.psi);
  for (double& v : out.std_residuals) v /= out.sigma;
  return out;
}

bool gaussianity_battery(std::span<const double> std_residuals,
                         InitDiagnostics& out) {
  const DiagnosticsReport report = diagnose(std_residuals);
  out.ran = true;
  out.jb_reject = report.reject.jb;
  out.ks_reject = report.reject.ks;
  out.ad_reject = report.reject.ad;
  return out.any_reject();
}

void check_years(const MonitorState& state, const BudgetImbalanceSeries& s) {
  if (s.years.empty()) return;
  if (s.years.size() != s.values.size()) {
    raise(errc::window_mismatch,
          "vintage carries " + std::to_string(s.years.size()) +
              " year labels for " + std::to_string(s.values.size()) +
              " values");
  }
  if (state.first_year != 0 && s.years.front() != state.first_year) {
    raise(errc::window_mismatch,
          "vintage starts in " + std::to_string(s.years.front()) +
              ", monitor was initialized from " +
              std::to_string(state.first_year));
  }
}

int record_year(const MonitorState& state, const BudgetImbalanceSeries& s) {
  if (!s.years.empty()) return s.years.back();
  if (state.first_year != 0) {
    return state.first_year + int(s.values.size()) - 1;
  }
  return int(s.values.size());
}

void append_row(std::ostream& out, const StepRecord& r) {
  out << r.year << ',' << r.n << ',' << detail::g17(r.phi_hat) << ','
      << detail::g17(r.sigma_hat) << ',' << detail::g17(r.innovation) << ','
      << detail::g17(r.z) << ',' << detail::g17(r.boundary) << ','
      << (r.reject ? 1 : 0) << ',' << (r.gauss_warn ? 1 : 0) << '\n';
}

std::string_view status_token(const MonitorState& state) {
  switch (state.status) {
    case MonitorStatus::running:
      return "running";
    case MonitorStatus::rejected:
      return "rejected";
    case MonitorStatus::horizon_exhausted:
      return "horizon_exhausted";
  }
  return "running";
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      return fields;
    }
    fields.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

}  // namespace

MonitorState init_monitor(const MonitorConfig& config,
                          const BudgetImbalanceSeries& initial) {
  if (config.k_window < 3) {
    raise(errc::invalid_argument,
          "initial window length must be at least 3, got " +
              std::to_string(config.k_window));
  }
  if (!config.boundary.calibrated()) {
    raise(errc::not_calibrated,
          "monitor requires a calibrated boundary constant");
  }
  if (initial.values.size() != std::size_t(config.k_window)) {
    raise(errc::window_mismatch,
          "initial window must have exactly " +
              std::to_string(config.k_window) + " observations, got " +
              std::to_string(initial.values.size()));
  }
  if (!initial.years.empty() &&
      initial.years.size() != initial.values.size()) {
    raise(errc::window_mismatch,
          "initial window carries " + std::to_string(initial.years.size()) +
              " year labels for " + std::to_string(initial.values.size()) +
              " values");
  }

  MonitorState state;
  state.config = config;
  state.first_year = initial.years.empty() ? 0 : initial.years.front();

  const WindowFit fit = fit_window(config, initial.values);
  state.init_phi = fit.phi_lead;
  state.init_sigma = fit.sigma;
  if (fit.stationarity_warning) {
    state.warnings.push_back("initial fit: |phi| >= 1");
  }
  if (config.gaussianity_check) {
    gaussianity_battery(fit.std_residuals, state.init_check);
  }
  return state;
}

MonitorState init_monitor(const MonitorConfig& config, const Vintage& initial) {
  return init_monitor(config, budget_imbalance(initial));
}

StepRecord step(MonitorState& state, const BudgetImbalanceSeries& vintage) {
  if (state.status != MonitorStatus::running) {
    raise(errc::already_terminal,
          state.status == MonitorStatus::rejected
              ? "monitor already rejected in " +
                    std::to_string(state.rejection_year)
              : "monitoring horizon already exhausted");
  }
  const std::size_t expected =
      std::size_t(state.config.k_window) + state.steps.size() + 1;
  if (vintage.values.size() != expected) {
    raise(errc::window_mismatch,
          "expected a vintage with " + std::to_string(expected) +
              " observations, got " + std::to_string(vintage.values.size()));
  }
  check_years(state, vintage);
  if (state.first_year == 0 && !vintage.years.empty()) {
    state.first_year = vintage.years.front();
  }

  const std::span<const double> values(vintage.values);
  const WindowFit fit = fit_window(
      state.config, values.first(std::size_t(state.config.k_window)));

  const std::vector<double> raw = arma_innovations(values, fit.phi, fit.psi);
  const double innovation = raw.back() / fit.sigma;

  const int t = int(state.steps.size()) + 1;
  StepRecord record;
  record.year = record_year(state, vintage);
  record.n = vintage.values.size();
  record.phi_hat = fit.phi_lead;
  record.sigma_hat = fit.sigma;
  record.innovation = innovation;
  record.z = state.z() + innovation;
  record.boundary = boundary_value(state.config.boundary, t);
  record.reject = record.z <= -record.boundary;
  if (state.config.gaussianity_check) {
    InitDiagnostics scratch;
    record.gauss_warn = gaussianity_battery(fit.std_residuals, scratch);
  }
  if (fit.stationarity_warning) {
    state.warnings.push_back("year " + std::to_string(record.year) +
                             ": refit |phi| >= 1");
  }

  state.steps.push_back(record);
  if (record.reject) {
    state.status = MonitorStatus::rejected;
    state.rejection_year = record.year;
  } else if (t >= state.config.boundary.horizon) {
    state.status = MonitorStatus::horizon_exhausted;
  }
  return record;
}

StepRecord step(MonitorState& state, const Vintage& vintage) {
  return step(state, budget_imbalance(vintage));
}

std::string status_report(const MonitorState& state) {
  std::ostringstream out;
  char buf[160];
  const BoundarySpec& b = state.config.boundary;
  // The init fit is not part of the durable state format; after a reload
  // the latest per-step refit stands in for it.
  double phi = state.init_phi;
  double sigma = state.init_sigma;
  if (phi == 0.0 && sigma == 0.0 && !state.steps.empty()) {
    phi = state.steps.back().phi_hat;
    sigma = state.steps.back().sigma_hat;
  }
  std::snprintf(buf, sizeof(buf),
                "null model ARMA(%d,%d) on a window of %d observations: "
                "phi = %.4f, sigma = %.4f\n",
                state.config.p, state.config.q, state.config.k_window, phi,
                sigma);
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "boundary C(t) = c sqrt(t), c = %.5f  (T = %d, alpha = %g)\n",
                b.c, b.horizon, b.alpha);
  out << buf;
  if (state.init_check.ran) {
    out << "initial residual checks: "
        << (state.init_check.any_reject() ? "gaussianity rejected at 5%"
                                          : "no gaussianity rejection")
        << '\n';
  }
  for (const std::string& w : state.warnings) out << "warning: " << w << '\n';

  if (!state.steps.empty()) {
    out << "\nstep  year      n  phi_hat  sigma_hat  innovation         z  "
           "boundary  decision\n";
    int t = 0;
    for (const StepRecord& r : state.steps) {
      ++t;
      std::snprintf(buf, sizeof(buf),
                    "%4d  %4d  %5zu  %7.4f  %9.4f  %10.4f  %8.4f  %8.4f  %s%s\n",
                    t, r.year, r.n, r.phi_hat, r.sigma_hat, r.innovation, r.z,
                    r.boundary, r.reject ? "REJECT" : "continue",
                    r.gauss_warn ? " (gauss)" : "");
      out << buf;
    }
  }

  out << '\n';
  switch (state.status) {
    case MonitorStatus::running:
      std::snprintf(buf, sizeof(buf),
                    "status: running; %zu of %d monitored years used; "
                    "z = %.4f\n",
                    state.steps.size(), b.horizon, state.z());
      break;
    case MonitorStatus::rejected:
      std::snprintf(buf, sizeof(buf),
                    "status: systematic deviation detected in %d "
                    "(step %zu of %d); z = %.4f\n",
                    state.rejection_year, state.steps.size(), b.horizon,
                    state.z());
      break;
    case MonitorStatus::horizon_exhausted:
      std::snprintf(buf, sizeof(buf),
                    "status: horizon exhausted after %d years with no "
                    "rejection; z = %.4f\n",
                    b.horizon, state.z());
      break;
  }
  out << buf;
  return out.str();
}

void save_state(const MonitorState& state, std::ostream& out) {
  const BoundarySpec& b = state.config.boundary;
  out << "version=1\n";
  out << "alpha=" << detail::round_trip(b.alpha) << '\n';
  out << "T=" << b.horizon << '\n';
  out << "K=" << state.config.k_window << '\n';
  out << "f=" << b.f_kind << '\n';
  out << "c=" << detail::g17(b.c) << '\n';
  out << "status=" << status_token(state);
  if (state.status == MonitorStatus::rejected) {
    out << ':' << state.rejection_year;
  }
  out << '\n';
  out << kCsvHeader << '\n';
  for (const StepRecord& r : state.steps) append_row(out, r);
}

std::string save_state(const MonitorState& state) {
  std::ostringstream out;
  save_state(state, out);
  return out.str();
}

MonitorState load_state(std::istream& in) {
  MonitorState state;
  BoundarySpec boundary;
  bool saw_alpha = false, saw_t = false, saw_k = false, saw_f = false,
       saw_c = false, saw_status = false;
  std::string status_field;

  std::string line;
  if (!std::getline(in, line) || detail::trim_cr(line) != "version=1") {
    raise(errc::invalid_argument, "unsupported monitor state version");
  }

  bool in_body = false;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const std::string_view body = detail::trim_cr(line);
    if (body.empty()) continue;
    if (!in_body) {
      if (body == kCsvHeader) {
        in_body = true;
        continue;
      }
      const std::size_t eq = body.find('=');
      if (eq == std::string_view::npos) {
        raise(errc::invalid_argument,
              "malformed monitor state header line '" + std::string(body) +
                  "'");
      }
      const std::string_view key = body.substr(0, eq);
      const std::string_view value = body.substr(eq + 1);
      if (key == "alpha") {
        boundary.alpha =
            detail::parse_double(value, errc::malformed_number, "state");
        saw_alpha = true;
      } else if (key == "T") {
        boundary.horizon =
            int(detail::parse_long(value, errc::malformed_number, "state"));
        saw_t = true;
      } else if (key == "K") {
        state.config.k_window =
            int(detail::parse_long(value, errc::malformed_number, "state"));
        saw_k = true;
      } else if (key == "f") {
        boundary.f_kind = std::string(value);
        saw_f = true;
      } else if (key == "c") {
        boundary.c =
            detail::parse_double(value, errc::malformed_number, "state");
        saw_c = true;
      } else if (key == "status") {
        status_field = std::string(value);
        saw_status = true;
      } else {
        raise(errc::invalid_argument,
              "unknown monitor state field '" + std::string(key) + "'");
      }
      continue;
    }

    ++row;
    const std::string ctx = "state row " + std::to_string(row);
    const auto fields = split_csv(body);
    if (fields.size() != 9) {
      raise(errc::invalid_argument,
            ctx + " has " + std::to_string(fields.size()) +
                " fields, expected 9");
    }
    StepRecord r;
    r.year = int(detail::parse_long(fields[0], errc::malformed_number, ctx));
    r.n = std::size_t(
        detail::parse_long(fields[1], errc::malformed_number, ctx));
    r.phi_hat = detail::parse_double(fields[2], errc::malformed_number, ctx);
    r.sigma_hat = detail::parse_double(fields[3], errc::malformed_number, ctx);
    r.innovation =
        detail::parse_double(fields[4], errc::malformed_number, ctx);
    r.z = detail::parse_double(fields[5], errc::malformed_number, ctx);
    r.boundary = detail::parse_double(fields[6], errc::malformed_number, ctx);
    const long decision =
        detail::parse_long(fields[7], errc::malformed_number, ctx);
    const long gauss =
        detail::parse_long(fields[8], errc::malformed_number, ctx);
    if ((decision != 0 && decision != 1) || (gauss != 0 && gauss != 1)) {
      raise(errc::invalid_argument, ctx + " flags must be 0 or 1");
    }
    r.reject = decision == 1;
    r.gauss_warn = gauss == 1;
    state.steps.push_back(r);
  }

  if (!in_body || !saw_alpha || !saw_t || !saw_k || !saw_f || !saw_c ||
      !saw_status) {
    raise(errc::invalid_argument, "incomplete monitor state file");
  }

  state.config.boundary = std::move(boundary);
  if (status_field == "running") {
    state.status = MonitorStatus::running;
  } else if (status_field.rfind("rejected:", 0) == 0) {
    state.status = MonitorStatus::rejected;
    state.rejection_year =
        int(detail::parse_long(std::string_view(status_field).substr(9),
                               errc::malformed_number, "state status"));
  } else if (status_field == "horizon_exhausted") {
    state.status = MonitorStatus::horizon_exhausted;
  } else {
    raise(errc::invalid_argument,
          "unknown monitor status '" + status_field + "'");
  }

  if (!state.steps.empty()) {
    state.first_year = state.steps.front().year - state.config.k_window;
  }
  return state;
}

MonitorState load_state(const std::string& text) {
  std::istringstream in(text);
  return load_state(in);
}

}  // namespace carbmon
