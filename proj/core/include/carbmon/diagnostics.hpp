#pragma once

#include <cstddef>
#include <map>
#include <span>

namespace carbmon {

/// Sample moments. std_dev uses divisor n-1; skew and kurt are the
/// population (biased, moment-based) estimators; kurt is not excess kurtosis.
struct Moments {
  double mean = 0.0;
  double std_dev = 0.0;
  double skew = 0.0;
  double kurt = 0.0;
};

/// Computes all four sample moments.
/// Throws TooFewObservations (n < 2) and DegenerateSeries (zero variance,
/// which leaves skew/kurt undefined).
Moments descriptive_stats(std::span<const double> x);

/// Jarque-Bera statistic N = (n/6) * (S^2 + (K-3)^2 / 4).
double jarque_bera(std::span<const double> x);

/// Kolmogorov-Smirnov distance from the standard normal after standardizing
/// by the sample mean and std:
///   D = max_i max(i/n - Phi(z_(i)), Phi(z_(i)) - (i-1)/n).
double ks_gaussian(std::span<const double> x);

/// Anderson-Darling statistic on standardized sorted data:
///   A^2 = -n - (1/n) * sum_i (2i-1) [ln Phi(z_(i)) + ln(1 - Phi(z_(n+1-i)))].
/// Phi values indistinguishable from 0 or 1 are clamped at a machine-safe
/// bound; when that happens *underflow_clamped (if non-null) is set.
double anderson_darling(std::span<const double> x,
                        bool* underflow_clamped = nullptr);

/// Durbin-Watson statistic with a raw (not demeaned) denominator:
///   DW = sum_{t=2..n} (x_t - x_{t-1})^2 / sum_{t=1..n} x_t^2.
double durbin_watson(std::span<const double> x);

/// Ljung-Box statistic Q(m) = n(n+2) sum_{k=1..m} rho_k^2 / (n-k), with
/// rho_k the sample autocorrelation about the sample mean.
double ljung_box(std::span<const double> x, int max_lag);

/// Fixed 5% critical values used for the reject decisions.
struct CriticalValues {
  double jb = 5.99;
  double ks = 0.18;
  double ad = 0.74;
  double q1 = 3.84;
  double q5 = 11.07;
};

struct DiagnosticsReport {
  std::size_t n = 0;
  Moments moments;
  double jb = 0.0;
  double ks = 0.0;
  double ad = 0.0;
  double dw = 0.0;
  std::map<int, double> q;  // lag -> Ljung-Box statistic
  struct Decisions {        // true = reject at the 5% critical value
    bool jb = false;
    bool ks = false;
    bool ad = false;
    bool q1 = false;
    bool q5 = false;
  } reject;
  bool ad_underflow = false;

  /// Gaussianity verdict: any of the three distribution tests rejecting.
  bool gaussianity_rejected() const noexcept {
    return reject.jb || reject.ks || reject.ad;
  }
};

/// Runs the full battery (moments, JB, KS, AD, DW, Q(1), Q(5)) and applies
/// the 5% decisions.
DiagnosticsReport diagnose(std::span<const double> x,
                           const CriticalValues& cv = {});

}  // namespace carbmon
