#include "carbmon/errors.hpp"

namespace carbmon {

const char* errc_name(errc code) noexcept {
  switch (code) {
    case errc::missing_column: return "MissingColumn";
    case errc::non_consecutive_years: return "NonConsecutiveYears";
    case errc::empty_data: return "EmptyData";
    case errc::malformed_number: return "MalformedNumber";
    case errc::invalid_year: return "InvalidYear";
    case errc::io_error: return "IoError";
    case errc::too_few_observations: return "TooFewObservations";
    case errc::degenerate_series: return "DegenerateSeries";
    case errc::degenerate_regressor: return "DegenerateRegressor";
    case errc::degenerate_fit: return "DegenerateFit";
    case errc::lag_too_large: return "LagTooLarge";
    case errc::non_convergence: return "NonConvergence";
    case errc::invalid_alpha: return "InvalidAlpha";
    case errc::invalid_horizon: return "InvalidHorizon";
    case errc::not_calibrated: return "NotCalibrated";
    case errc::non_positive_step: return "NonPositiveStep";
    case errc::window_mismatch: return "WindowMismatch";
    case errc::already_terminal: return "AlreadyTerminal";
    case errc::invalid_fraction: return "InvalidFraction";
    case errc::non_stationary_parameter: return "NonStationaryParameter";
    case errc::invalid_argument: return "InvalidArgument";
    case errc::numerical_underflow: return "NumericalUnderflow";
  }
  return "UnknownError";
}

}  // namespace carbmon
