#include <cmath>
#include <cstddef>
#include <vector>

#include "carbmon/arma.hpp"
#include "carbmon/errors.hpp"
#include "carbmon/flux_data.hpp"
#include "carbmon/rng.hpp"
#include "carbmon/scenario.hpp"
#include "doctest.h"
#include "reference_values.hpp"

using carbmon::errc;

TEST_SUITE_BEGIN("arma");

TEST_CASE("ar(1) least squares on a hand-checked sample") {
  const std::vector<double> y{1.0, 2.0, 3.0};
  const carbmon::Ar1Fit fit = carbmon::fit_ar1(y);
  // phi = (2*1 + 3*2) / (1 + 4) = 1.6; residuals 0.4, -0.2; sigma = sqrt(0.2).
  CHECK(fit.phi == doctest::Approx(1.6).epsilon(1e-15));
  CHECK(fit.sigma == doctest::Approx(std::sqrt(0.2)).epsilon(1e-15));
  REQUIRE(fit.residuals.size() == 2);
  CHECK(fit.residuals[0] ==
        doctest::Approx(0.8944271909999157).epsilon(1e-12));
  CHECK(fit.residuals[1] ==
        doctest::Approx(-0.44721359549995837).epsilon(1e-12));
  CHECK(fit.n == 3);
  CHECK(fit.stationarity_warning);  // |1.6| >= 1
}

TEST_CASE("ar(1) fit matches the reference values on the bundled data") {
  const carbmon::Vintage v = carbmon::load_vintage(CARBMON_DATA_FILE);
  const carbmon::BudgetImbalanceSeries bi = carbmon::budget_imbalance(v);
  const carbmon::Ar1Fit fit = carbmon::fit_ar1(bi.values);
  CHECK(fit.phi == doctest::Approx(refvals::kPhi).epsilon(1e-12));
  CHECK(fit.sigma == doctest::Approx(refvals::kSigma).epsilon(1e-12));
  CHECK_FALSE(fit.stationarity_warning);
  REQUIRE(fit.residuals.size() == 60);
  for (std::size_t i = 0; i < fit.residuals.size(); ++i) {
    CHECK(fit.residuals[i] ==
          doctest::Approx(refvals::kStdResiduals[i]).epsilon(1e-10));
  }
}

TEST_CASE("ar(1) estimator is scale and sign equivariant") {
  const carbmon::Vintage v = carbmon::load_vintage(CARBMON_DATA_FILE);
  const carbmon::BudgetImbalanceSeries bi = carbmon::budget_imbalance(v);
  const carbmon::Ar1Fit base = carbmon::fit_ar1(bi.values);

  std::vector<double> scaled(bi.values);
  for (double& x : scaled) x *= 3.7;
  const carbmon::Ar1Fit s = carbmon::fit_ar1(scaled);
  CHECK(s.phi == doctest::Approx(base.phi).epsilon(1e-12));
  CHECK(s.sigma == doctest::Approx(3.7 * base.sigma).epsilon(1e-12));
  for (std::size_t i = 0; i < s.residuals.size(); ++i) {
    CHECK(s.residuals[i] ==
          doctest::Approx(base.residuals[i]).epsilon(1e-12));
  }

  std::vector<double> flipped(bi.values);
  for (double& x : flipped) x = -x;
  const carbmon::Ar1Fit f = carbmon::fit_ar1(flipped);
  CHECK(f.phi == doctest::Approx(base.phi).epsilon(1e-12));
  CHECK(f.sigma == doctest::Approx(base.sigma).epsilon(1e-12));
}

TEST_CASE("ar(1) failure modes carry the documented codes") {
  try {
    carbmon::fit_ar1(std::vector<double>{1.0, 2.0});
    FAIL("expected too_few_observations");
  } catch (const carbmon::error& e) {
    CHECK(e.code() == errc::too_few_observations);
  }
  try {
    carbmon::fit_ar1(std::vector<double>{0.0, 0.0, 0.0, 1.0});
    FAIL("expected degenerate_regressor");
  } catch (const carbmon::error& e) {
    CHECK(e.code() == errc::degenerate_regressor);
  }
  try {
    // Exact AR(1) line: zero residual variance.
    carbmon::fit_ar1(std::vector<double>{1.0, 0.5, 0.25, 0.125});
    FAIL("expected degenerate_fit");
  } catch (const carbmon::error& e) {
    CHECK(e.code() == errc::degenerate_fit);
  }
}

TEST_CASE("css pure-ar cell agrees with the direct ar(1) estimator") {
  const carbmon::Vintage v = carbmon::load_vintage(CARBMON_DATA_FILE);
  const carbmon::BudgetImbalanceSeries bi = carbmon::budget_imbalance(v);
  const std::size_t n = bi.values.size();

  const carbmon::Ar1Fit ols = carbmon::fit_ar1(bi.values);
  const carbmon::ArmaFit css = carbmon::fit_arma(bi.values, 1, 0);

  REQUIRE(css.phi.size() == 1);
  CHECK(css.phi[0] == ols.phi);  // same closed-form normal equations
  CHECK(css.converged);
  CHECK(css.iterations == 0);

  // CSS counts the zero-pre-sample first residual and divides by n:
  // n sigma_css^2 = y_1^2 + (n-2) sigma_ols^2.
  const double y1 = bi.values.front();
  CHECK(double(n) * css.sigma * css.sigma ==
        doctest::Approx(y1 * y1 +
                        double(n - 2) * ols.sigma * ols.sigma)
            .epsilon(1e-12));
}

TEST_CASE("white-noise cell reduces to the root mean square") {
  const std::vector<double> y{1.0, -2.0, 2.0, -1.0};
  const carbmon::ArmaFit fit = carbmon::fit_arma(y, 0, 0);
  CHECK(fit.sigma == doctest::Approx(std::sqrt(10.0 / 4.0)).epsilon(1e-15));
  CHECK(fit.loglik ==
        doctest::Approx(-0.5 * 4.0 *
                        (std::log(2.0 * M_PI * 10.0 / 4.0) + 1.0))
            .epsilon(1e-12));
  CHECK(fit.bic == doctest::Approx(std::log(4.0) - 2.0 * fit.loglik)
                       .epsilon(1e-12));
}

TEST_CASE("innovation recursion matches hand calculations") {
  const std::vector<double> y{1.0, 2.0, 3.0};

  // No model: the innovations are the series itself.
  const std::vector<double> none =
      carbmon::arma_innovations(y, {}, {});
  CHECK(none == y);

  // AR(1), zero pre-sample: e_1 = y_1, e_t = y_t - phi y_{t-1}.
  const std::vector<double> phi{0.5};
  const std::vector<double> ar = carbmon::arma_innovations(y, phi, {});
  REQUIRE(ar.size() == 3);
  CHECK(ar[0] == doctest::Approx(1.0));
  CHECK(ar[1] == doctest::Approx(1.5));
  CHECK(ar[2] == doctest::Approx(2.0));

  // MA(1): e_1 = y_1, e_t = y_t - psi e_{t-1}.
  const std::vector<double> psi{0.5};
  const std::vector<double> ma = carbmon::arma_innovations(y, {}, psi);
  CHECK(ma[0] == doctest::Approx(1.0));
  CHECK(ma[1] == doctest::Approx(2.0 - 0.5 * 1.0));
  CHECK(ma[2] == doctest::Approx(3.0 - 0.5 * 1.5));
}

TEST_CASE("simplex search recovers arma(1,1) parameters in simulation") {
  // y_t = 0.5 y_{t-1} + e_t + 0.3 e_{t-1}, sigma = 1.
  carbmon::GaussianStream stream(99, carbmon::StreamDomain::tests, 0);
  const std::size_t n = 4000;
  std::vector<double> y(n);
  double prev_y = 0.0, prev_e = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double e = stream.normal();
    y[t] = 0.5 * prev_y + e + 0.3 * prev_e;
    prev_y = y[t];
    prev_e = e;
  }
  const carbmon::ArmaFit fit = carbmon::fit_arma(y, 1, 1);
  CHECK(fit.converged);
  CHECK(fit.iterations > 0);
  CHECK(fit.phi[0] == doctest::Approx(0.5).epsilon(0.15));
  CHECK(fit.psi[0] == doctest::Approx(0.3).epsilon(0.25));
  CHECK(fit.sigma == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("ar(1) estimates concentrate on the truth") {
  // Mean of phi-hat over many medium samples stays within Monte Carlo
  // tolerance of the data-generating value.
  const int reps = 2000;
  const std::size_t n = 500;
  double sum_phi = 0.0;
  for (int b = 0; b < reps; ++b) {
    carbmon::GaussianStream stream(7, carbmon::StreamDomain::tests,
                                   std::uint64_t(b));
    const std::vector<double> y = carbmon::simulate_ar1(0.35, 0.72, n, stream);
    sum_phi += carbmon::fit_ar1(y).phi;
  }
  // Small-sample bias of the no-intercept estimator is O(1/n).
  CHECK(sum_phi / reps == doctest::Approx(0.35).epsilon(0.02));
}

TEST_CASE("selection order prefers small bic, then parsimony, then ar") {
  carbmon::BicCell a{1, 0, 100.0, true};
  carbmon::BicCell b{0, 1, 100.0, true};
  carbmon::BicCell c{2, 0, 99.0, true};
  carbmon::BicCell d{0, 2, 100.0, true};
  carbmon::BicCell e{1, 1, 100.0, true};

  CHECK(carbmon::bic_better(c, a));       // lower bic wins
  CHECK_FALSE(carbmon::bic_better(a, c));
  CHECK(carbmon::bic_better(a, e));       // same bic: smaller p+q
  CHECK(carbmon::bic_better(a, b));       // same bic, same p+q: smaller q
  CHECK_FALSE(carbmon::bic_better(b, a));
  CHECK_FALSE(carbmon::bic_better(a, a));  // strict
  CHECK(carbmon::bic_better(b, d));
}

TEST_CASE("grid selection visits every cell and is reproducible") {
  const carbmon::Vintage v = carbmon::load_vintage(CARBMON_DATA_FILE);
  const carbmon::BudgetImbalanceSeries bi = carbmon::budget_imbalance(v);

  const carbmon::BicSelection sel = carbmon::bic_select(bi.values, 2, 2);
  CHECK(sel.grid.size() == 9);
  CHECK(sel.p == 1);
  CHECK(sel.q == 0);

  // The winner beats (or ties per the order) every converged cell.
  carbmon::BicCell winner;
  for (const carbmon::BicCell& cell : sel.grid) {
    if (cell.p == sel.p && cell.q == sel.q) winner = cell;
  }
  for (const carbmon::BicCell& cell : sel.grid) {
    if (cell.converged) CHECK_FALSE(carbmon::bic_better(cell, winner));
  }

  const carbmon::BicSelection again = carbmon::bic_select(bi.values, 2, 2);
  CHECK(again.p == sel.p);
  CHECK(again.q == sel.q);
  for (std::size_t i = 0; i < sel.grid.size(); ++i) {
    CHECK(again.grid[i].bic == sel.grid[i].bic);
  }
}

TEST_CASE("too-short samples are rejected with the order in the message") {
  try {
    carbmon::fit_arma(std::vector<double>{1.0, 2.0, 3.0, 4.0}, 1, 1);
    FAIL("expected too_few_observations");
  } catch (const carbmon::error& e) {
    CHECK(e.code() == errc::too_few_observations);
  }
}

TEST_SUITE_END();
