#pragma once

#include <stdexcept>
#include <string>

namespace carbmon {

// Machine-readable failure codes. The CLI maps these to exit classes and
// prints them with the names returned by errc_name().
enum class errc {
  // data / parsing
  missing_column,
  non_consecutive_years,
  empty_data,
  malformed_number,
  invalid_year,
  io_error,
  // estimation
  too_few_observations,
  degenerate_series,
  degenerate_regressor,
  degenerate_fit,
  lag_too_large,
  non_convergence,
  // calibration / boundary
  invalid_alpha,
  invalid_horizon,
  not_calibrated,
  non_positive_step,
  // monitoring
  window_mismatch,
  already_terminal,
  // scenarios
  invalid_fraction,
  non_stationary_parameter,
  // generic
  invalid_argument,
  numerical_underflow,
};

// Stable CamelCase identifier, e.g. errc::missing_column -> "MissingColumn".
const char* errc_name(errc code) noexcept;

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  errc code_;
  std::string detail_;
};

[[noreturn]] inline void raise(errc code, const std::string& detail) {
  throw error(code, detail);
}

}  // namespace carbmon
