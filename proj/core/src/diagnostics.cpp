#include "carbmon/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "carbmon/errors.hpp"

namespace carbmon {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void require_n(std::span<const double> x, std::size_t n_min) {
  if (x.size() < n_min) {
    raise(errc::too_few_observations,
          "need at least " + std::to_string(n_min) + " observations, got " +
              std::to_string(x.size()));
  }
}

// Standardized copy, sorted ascending. Throws on zero variance.
std::vector<double> standardize_sorted(std::span<const double> x) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= double(n);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / double(n - 1));
  if (sd == 0.0) raise(errc::degenerate_series, "zero sample variance");
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = (x[i] - mean) / sd;
  std::sort(z.begin(), z.end());
  return z;
}

}  // namespace

Moments descriptive_stats(std::span<const double> x) {
  require_n(x, 2);
  const double n = double(x.size());
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0, ss = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    ss += d * d;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m.std_dev = std::sqrt(ss / (n - 1.0));
  if (m.std_dev == 0.0) {
    raise(errc::degenerate_series, "zero variance, skew/kurt undefined");
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.skew = m3 / std::pow(m2, 1.5);
  m.kurt = m4 / (m2 * m2);
  return m;
}

double jarque_bera(std::span<const double> x) {
  const Moments m = descriptive_stats(x);
  const double n = double(x.size());
  const double dk = m.kurt - 3.0;
  return n / 6.0 * (m.skew * m.skew + dk * dk / 4.0);
}

double ks_gaussian(std::span<const double> x) {
  require_n(x, 2);
  const auto z = standardize_sorted(x);
  const double n = double(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = normal_cdf(z[i]);
    const double hi = double(i + 1) / n - f;
    const double lo = f - double(i) / n;
    d = std::max(d, std::max(hi, lo));
  }
  return d;
}

double anderson_darling(std::span<const double> x, bool* underflow_clamped) {
  require_n(x, 2);
  const auto z = standardize_sorted(x);
  const std::size_t n = z.size();
  bool clamped = false;
  auto safe_cdf = [&clamped](double v) {
    double f = normal_cdf(v);
    if (f < 1e-300) {
      f = 1e-300;
      clamped = true;
    } else if (f > 1.0 - 1e-16) {
      f = 1.0 - 1e-16;
      clamped = true;
    }
    return f;
  };
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double fi = safe_cdf(z[i]);
    const double fr = safe_cdf(z[n - 1 - i]);
    sum += double(2 * i + 1) * (std::log(fi) + std::log(1.0 - fr));
  }
  if (underflow_clamped) *underflow_clamped = clamped;
  return -double(n) - sum / double(n);
}

double durbin_watson(std::span<const double> x) {
  require_n(x, 2);
  double num = 0.0, den = 0.0;
  den = x[0] * x[0];
  for (std::size_t t = 1; t < x.size(); ++t) {
    const double d = x[t] - x[t - 1];
    num += d * d;
    den += x[t] * x[t];
  }
  if (den == 0.0) raise(errc::degenerate_series, "zero sum of squares");
  return num / den;
}

double ljung_box(std::span<const double> x, int max_lag) {
  const std::size_t n = x.size();
  if (max_lag < 1) raise(errc::invalid_argument, "max_lag must be >= 1");
  if (std::size_t(max_lag) >= n) {
    raise(errc::lag_too_large, "lag " + std::to_string(max_lag) +
                                   " with only " + std::to_string(n) +
                                   " observations");
  }
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= double(n);
  double denom = 0.0;
  for (double v : x) denom += (v - mean) * (v - mean);
  if (denom == 0.0) raise(errc::degenerate_series, "zero variance");
  double q = 0.0;
  for (int k = 1; k <= max_lag; ++k) {
    double num = 0.0;
    for (std::size_t t = std::size_t(k); t < n; ++t) {
      num += (x[t] - mean) * (x[t - std::size_t(k)] - mean);
    }
    const double rho = num / denom;
    q += rho * rho / double(n - std::size_t(k));
  }
  return double(n) * (double(n) + 2.0) * q;
}

DiagnosticsReport diagnose(std::span<const double> x,
                           const CriticalValues& cv) {
  DiagnosticsReport r;
  r.n = x.size();
  r.moments = descriptive_stats(x);
  {
    const double n = double(r.n);
    const double dk = r.moments.kurt - 3.0;
    r.jb = n / 6.0 * (r.moments.skew * r.moments.skew + dk * dk / 4.0);
  }
  r.ks = ks_gaussian(x);
  r.ad = anderson_darling(x, &r.ad_underflow);
  r.dw = durbin_watson(x);
  r.q[1] = ljung_box(x, 1);
  r.q[5] = ljung_box(x, 5);
  r.reject.jb = r.jb > cv.jb;
  r.reject.ks = r.ks > cv.ks;
  r.reject.ad = r.ad > cv.ad;
  r.reject.q1 = r.q[1] > cv.q1;
  r.reject.q5 = r.q[5] > cv.q5;
  return r;
}

}  // namespace carbmon
