#include "carbmon/arma.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "carbmon/errors.hpp"

namespace carbmon {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Conditional-sum-of-squares residuals with zero pre-sample values and
// innovations; returns the sum of squared residuals.
double css_ssr(std::span<const double> y, std::span<const double> phi,
               std::span<const double> psi, std::vector<double>& e) {
  const std::size_t n = y.size();
  const std::size_t p = phi.size();
  const std::size_t q = psi.size();
  e.assign(n, 0.0);
  double ssr = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double v = y[t];
    for (std::size_t i = 1; i <= p && i <= t; ++i) v -= phi[i - 1] * y[t - i];
    for (std::size_t j = 1; j <= q && j <= t; ++j) v -= psi[j - 1] * e[t - j];
    e[t] = v;
    ssr += v * v;
  }
  return ssr;
}

double gaussian_loglik(std::size_t n, double ssr) {
  const double s2 = ssr / double(n);
  return -0.5 * double(n) * (std::log(kTwoPi * s2) + 1.0);
}

// Solves A x = b for a small symmetric system by Gaussian elimination with
// partial pivoting. Returns false when singular.
bool solve_small(std::vector<double> a, std::vector<double> b,
                 std::size_t d, std::vector<double>& x) {
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < d; ++r) {
      if (std::fabs(a[r * d + col]) > std::fabs(a[piv * d + col])) piv = r;
    }
    if (a[piv * d + col] == 0.0) return false;
    if (piv != col) {
      for (std::size_t cc = 0; cc < d; ++cc)
        std::swap(a[col * d + cc], a[piv * d + cc]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < d; ++r) {
      const double f = a[r * d + col] / a[col * d + col];
      for (std::size_t cc = col; cc < d; ++cc) a[r * d + cc] -= f * a[col * d + cc];
      b[r] -= f * b[col];
    }
  }
  x.assign(d, 0.0);
  for (std::size_t ri = d; ri-- > 0;) {
    double v = b[ri];
    for (std::size_t cc = ri + 1; cc < d; ++cc) v -= a[ri * d + cc] * x[cc];
    x[ri] = v / a[ri * d + ri];
  }
  return true;
}

// Padded least squares for the pure-AR case: minimizes the CSS objective in
// closed form over all t with zero pre-sample regressors.
std::vector<double> fit_pure_ar(std::span<const double> y, std::size_t p) {
  const std::size_t n = y.size();
  auto lag = [&](std::size_t t, std::size_t i) -> double {
    return t >= i ? y[t - i] : 0.0;
  };
  std::vector<double> a(p * p, 0.0), b(p, 0.0), x;
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t i = 1; i <= p; ++i) {
      b[i - 1] += y[t] * lag(t, i);
      for (std::size_t j = i; j <= p; ++j) {
        a[(i - 1) * p + (j - 1)] += lag(t, i) * lag(t, j);
      }
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < i; ++j) a[i * p + j] = a[j * p + i];
  }
  if (!solve_small(std::move(a), std::move(b), p, x)) {
    raise(errc::degenerate_regressor, "singular AR normal equations");
  }
  return x;
}

struct SimplexResult {
  std::vector<double> x;
  double f = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Deterministic Nelder-Mead on an arbitrary objective.
template <typename F>
SimplexResult nelder_mead(F&& objective, std::vector<double> x0,
                          double step, int max_iter, double fatol,
                          double xatol) {
  const std::size_t d = x0.size();
  std::vector<std::vector<double>> pts(d + 1, x0);
  std::vector<double> fv(d + 1);
  for (std::size_t i = 0; i < d; ++i) pts[i + 1][i] += step;
  for (std::size_t i = 0; i <= d; ++i) fv[i] = objective(pts[i]);

  std::vector<std::size_t> order(d + 1);
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order[0], worst = order[d],
                      second = order[d - 1];

    double fspread = std::fabs(fv[worst] - fv[best]);
    double xspread = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      xspread = std::max(
          xspread, std::fabs(pts[worst][i] - pts[best][i]));
    }
    if (fspread < fatol && xspread < xatol) {
      return {pts[best], fv[best], true, iter};
    }

    std::vector<double> centroid(d, 0.0);
    for (std::size_t k = 0; k <= d; ++k) {
      if (k == worst) continue;
      for (std::size_t i = 0; i < d; ++i) centroid[i] += pts[k][i];
    }
    for (std::size_t i = 0; i < d; ++i) centroid[i] /= double(d);

    auto blend = [&](double coef) {
      std::vector<double> p(d);
      for (std::size_t i = 0; i < d; ++i) {
        p[i] = centroid[i] + coef * (centroid[i] - pts[worst][i]);
      }
      return p;
    };

    auto reflected = blend(1.0);
    const double fr = objective(reflected);
    if (fr < fv[order[0]]) {
      auto expanded = blend(2.0);
      const double fe = objective(expanded);
      if (fe < fr) {
        pts[worst] = std::move(expanded);
        fv[worst] = fe;
      } else {
        pts[worst] = std::move(reflected);
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      pts[worst] = std::move(reflected);
      fv[worst] = fr;
      continue;
    }
    auto contracted = blend(fr < fv[worst] ? 0.5 : -0.5);
    const double fc = objective(contracted);
    if (fc < std::min(fr, fv[worst])) {
      pts[worst] = std::move(contracted);
      fv[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k <= d; ++k) {  // shrink toward best
      if (k == best) continue;
      for (std::size_t i = 0; i < d; ++i) {
        pts[k][i] = pts[best][i] + 0.5 * (pts[k][i] - pts[best][i]);
      }
      fv[k] = objective(pts[k]);
    }
  }
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
  return {pts[order[0]], fv[order[0]], false, iter};
}

}  // namespace

Ar1Fit fit_ar1(std::span<const double> y) {
  const std::size_t n = y.size();
  if (n < 3) {
    raise(errc::too_few_observations,
          "AR(1) needs n >= 3, got " + std::to_string(n));
  }
  double num = 0.0, den = 0.0;
  for (std::size_t t = 1; t < n; ++t) {
    num += y[t] * y[t - 1];
    den += y[t - 1] * y[t - 1];
  }
  if (den == 0.0) raise(errc::degenerate_regressor, "zero lagged energy");

  Ar1Fit fit;
  fit.n = n;
  fit.phi = num / den;
  double ssr = 0.0;
  std::vector<double> r(n - 1);
  for (std::size_t t = 1; t < n; ++t) {
    r[t - 1] = y[t] - fit.phi * y[t - 1];
    ssr += r[t - 1] * r[t - 1];
  }
  fit.sigma = std::sqrt(ssr / double(n - 2));
  if (fit.sigma == 0.0) {
    raise(errc::degenerate_fit, "zero innovation variance");
  }
  for (double& v : r) v /= fit.sigma;
  fit.residuals = std::move(r);
  fit.stationarity_warning = std::fabs(fit.phi) >= 1.0;
  return fit;
}

ArmaFit fit_arma(std::span<const double> y, int p, int q) {
  if (p < 0 || q < 0) raise(errc::invalid_argument, "negative model order");
  const std::size_t n = y.size();
  if (n < std::size_t(p + q + 3)) {
    raise(errc::too_few_observations,
          "ARMA(" + std::to_string(p) + "," + std::to_string(q) +
              ") needs n >= " + std::to_string(p + q + 3) + ", got " +
              std::to_string(n));
  }

  ArmaFit fit;
  fit.p = p;
  fit.q = q;
  std::vector<double> e;

  if (q == 0) {
    if (p > 0) fit.phi = fit_pure_ar(y, std::size_t(p));
    fit.converged = true;
    fit.iterations = 0;
  } else {
    const std::size_t d = std::size_t(p + q);
    auto objective = [&](const std::vector<double>& theta) {
      for (double v : theta) {
        if (std::fabs(v) > 50.0) return 1e300;
      }
      std::span<const double> ph(theta.data(), std::size_t(p));
      std::span<const double> ps(theta.data() + p, std::size_t(q));
      const double ssr = css_ssr(y, ph, ps, e);
      if (!std::isfinite(ssr) || ssr <= 0.0) return 1e300;
      return -gaussian_loglik(n, ssr);
    };
    auto res = nelder_mead(objective, std::vector<double>(d, 0.0), 0.1,
                           500 * int(d), 1e-12, 1e-9);
    fit.iterations = res.iterations;
    if (!res.converged) {
      raise(errc::non_convergence,
            "simplex search exhausted " + std::to_string(res.iterations) +
                " iterations, last objective " + std::to_string(res.f));
    }
    fit.converged = true;
    fit.phi.assign(res.x.begin(), res.x.begin() + p);
    fit.psi.assign(res.x.begin() + p, res.x.end());
  }

  const double ssr = css_ssr(y, fit.phi, fit.psi, e);
  if (ssr <= 0.0) raise(errc::degenerate_fit, "zero residual variance");
  fit.sigma = std::sqrt(ssr / double(n));
  fit.loglik = gaussian_loglik(n, ssr);
  const double k = double(p + q + 1);
  fit.bic = k * std::log(double(n)) - 2.0 * fit.loglik;
  return fit;
}

std::vector<double> arma_innovations(std::span<const double> y,
                                     std::span<const double> phi,
                                     std::span<const double> psi) {
  std::vector<double> e;
  css_ssr(y, phi, psi, e);
  return e;
}

bool bic_better(const BicCell& candidate, const BicCell& incumbent) noexcept {
  if (candidate.bic != incumbent.bic) return candidate.bic < incumbent.bic;
  if (candidate.p + candidate.q != incumbent.p + incumbent.q) {
    return candidate.p + candidate.q < incumbent.p + incumbent.q;
  }
  return candidate.q < incumbent.q;
}

BicSelection bic_select(std::span<const double> y, int p_max, int q_max) {
  if (p_max < 0 || q_max < 0) {
    raise(errc::invalid_argument, "negative grid bound");
  }
  BicSelection sel;
  bool have = false;
  BicCell best;
  for (int p = 0; p <= p_max; ++p) {
    for (int q = 0; q <= q_max; ++q) {
      BicCell cell{p, q, 0.0, false};
      try {
        const ArmaFit fit = fit_arma(y, p, q);
        cell.bic = fit.bic;
        cell.converged = true;
      } catch (const error& err) {
        if (err.code() == errc::non_convergence ||
            err.code() == errc::degenerate_fit ||
            err.code() == errc::degenerate_regressor) {
          sel.warnings.push_back("skipped (" + std::to_string(p) + "," +
                                 std::to_string(q) + "): " +
                                 std::string(errc_name(err.code())));
          sel.grid.push_back(cell);
          continue;
        }
        throw;
      }
      sel.grid.push_back(cell);
      if (!have || bic_better(cell, best)) {
        best = cell;
        have = true;
      }
    }
  }
  if (!have) {
    raise(errc::non_convergence, "no cell in the BIC grid converged");
  }
  sel.p = best.p;
  sel.q = best.q;
  return sel;
}

}  // namespace carbmon
