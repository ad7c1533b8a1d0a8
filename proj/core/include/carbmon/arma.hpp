#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace carbmon {

/// Zero-mean AR(1) fit by OLS without intercept:
///   phi = sum_{t=2..n} y_t y_{t-1} / sum_{t=2..n} y_{t-1}^2
///   sigma = sqrt(sum r_t^2 / (n-2)),  r_t = y_t - phi y_{t-1}
struct Ar1Fit {
  double phi = 0.0;
  double sigma = 0.0;
  std::vector<double> residuals;  // standardized, r_t / sigma, length n-1
  std::size_t n = 0;              // observations used
  bool stationarity_warning = false;  // |phi| >= 1
};

/// Throws TooFewObservations (n < 3), DegenerateRegressor (zero lag energy)
/// and DegenerateFit (zero residual variance).
Ar1Fit fit_ar1(std::span<const double> y);

/// The standardized residuals e_t = (y_t - phi y_{t-1}) / sigma, t = 2..n.
inline const std::vector<double>& standardized_residuals(const Ar1Fit& fit) {
  return fit.residuals;
}

/// Zero-mean ARMA(p,q) fitted by Gaussian conditional sum of squares with
/// zero pre-sample values and innovations. loglik is the Gaussian
/// conditional log-likelihood at the CSS optimum; bic = k ln(n) - 2 loglik
/// with k = p + q + 1.
struct ArmaFit {
  int p = 0;
  int q = 0;
  std::vector<double> phi;  // AR coefficients, size p
  std::vector<double> psi;  // MA coefficients, size q
  double sigma = 0.0;
  double loglik = 0.0;
  double bic = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Pure-AR cells (q = 0) solve the padded least-squares problem in closed
/// form; mixed cells run a derivative-free simplex search on the CSS
/// objective. Throws TooFewObservations (n < p + q + 3) and NonConvergence.
ArmaFit fit_arma(std::span<const double> y, int p, int q);

/// Raw one-step residuals e_t of the CSS recursion under the given
/// coefficients, zero pre-sample, one per observation. With p = q = 0 this
/// is the series itself.
std::vector<double> arma_innovations(std::span<const double> y,
                                     std::span<const double> phi,
                                     std::span<const double> psi);

struct BicCell {
  int p = 0;
  int q = 0;
  double bic = 0.0;
  bool converged = false;
};

struct BicSelection {
  int p = 0;
  int q = 0;
  std::vector<BicCell> grid;          // every attempted cell
  std::vector<std::string> warnings;  // skipped cells etc.
};

/// True when candidate beats incumbent under the selection order:
/// smaller bic, then smaller p+q, then smaller q. Deterministic regardless
/// of enumeration order.
bool bic_better(const BicCell& candidate, const BicCell& incumbent) noexcept;

/// Grid argmin of bic over (0..p_max) x (0..q_max). Non-converged cells are
/// skipped with a warning.
BicSelection bic_select(std::span<const double> y, int p_max, int q_max);

}  // namespace carbmon
