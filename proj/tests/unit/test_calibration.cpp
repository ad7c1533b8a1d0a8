#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "carbmon/calibration.hpp"
#include "carbmon/errors.hpp"
#include "doctest.h"

using carbmon::errc;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_SUITE_BEGIN("calibration");

TEST_CASE("boundary family evaluation") {
  CHECK(carbmon::boundary_f("sqrt", 4) == doctest::Approx(2.0));
  CHECK(carbmon::boundary_f("sqrt", 1) == doctest::Approx(1.0));
  try {
    carbmon::boundary_f("sqrt", 0);
    FAIL("expected non_positive_step");
  } catch (const carbmon::error& e) {
    CHECK(e.code() == errc::non_positive_step);
  }
  try {
    carbmon::boundary_f("cube", 1);
    FAIL("expected invalid_argument");
  } catch (const carbmon::error& e) {
    CHECK(e.code() == errc::invalid_argument);
  }
  CHECK_FALSE(carbmon::f_kind_supports_indefinite("sqrt"));
}

TEST_CASE("boundary_value requires calibration") {
  carbmon::BoundarySpec spec;
  spec.horizon = 30;
  spec.alpha = 0.05;
  CHECK_FALSE(spec.calibrated());
  try {
    carbmon::boundary_value(spec, 1);
    FAIL("expected not_calibrated");
  } catch (const carbmon::error& e) {
    CHECK(e.code() == errc::not_calibrated);
  }
  spec.c = 2.0;
  CHECK(carbmon::boundary_value(spec, 9) == doctest::Approx(6.0));
}

TEST_CASE("parameter validation") {
  try {
    carbmon::calibrate(30, 0.0, "sqrt", 100);
    FAIL("expected invalid_alpha");
  } catch (const carbmon::error& e) {
    CHECK(e.code() == errc::invalid_alpha);
  }
  try {
    carbmon::calibrate(30, 0.51, "sqrt", 100);
    FAIL("expected invalid_alpha");
  } catch (const carbmon::error& e) {
    CHECK(e.code() == errc::invalid_alpha);
  }
  try {
    carbmon::calibrate(0, 0.05, "sqrt", 100);
    FAIL("expected invalid_horizon");
  } catch (const carbmon::error& e) {
    CHECK(e.code() == errc::invalid_horizon);
  }
  try {
    carbmon::calibrate(30, 0.05, "sqrt", 0);
    FAIL("expected invalid_argument");
  } catch (const carbmon::error& e) {
    CHECK(e.code() == errc::invalid_argument);
  }
}

TEST_CASE("one-step horizon reduces to the gaussian upper quantile") {
  // With T = 1 the max is a single standard normal, so c is the empirical
  // (1 - alpha) quantile: 1.645 at 5%, 1.282 at 10%.
  const carbmon::BoundarySpec c05 = carbmon::calibrate(1, 0.05, "sqrt", 200000);
  CHECK(c05.c == doctest::Approx(1.6449).epsilon(0.01));
  const carbmon::BoundarySpec c10 = carbmon::calibrate(1, 0.10, "sqrt", 200000);
  CHECK(c10.c == doctest::Approx(1.2816).epsilon(0.01));
}

TEST_CASE("constants are monotone in horizon and size") {
  const double c30 = carbmon::calibrate(30, 0.05, "sqrt", 50000).c;
  const double c10 = carbmon::calibrate(10, 0.05, "sqrt", 50000).c;
  const double c1 = carbmon::calibrate(1, 0.05, "sqrt", 50000).c;
  CHECK(c30 > c10);
  CHECK(c10 > c1);

  const double a05 = carbmon::calibrate(30, 0.05, "sqrt", 50000).c;
  const double a10 = carbmon::calibrate(30, 0.10, "sqrt", 50000).c;
  const double a32 = carbmon::calibrate(30, 0.32, "sqrt", 50000).c;
  CHECK(a05 > a10);
  CHECK(a10 > a32);
}

TEST_CASE("thread count never changes the result") {
  const carbmon::BoundarySpec one = carbmon::calibrate(12, 0.10, "sqrt",
                                                       30000, 777, 1);
  const carbmon::BoundarySpec four = carbmon::calibrate(12, 0.10, "sqrt",
                                                        30000, 777, 4);
  CHECK(one.c == four.c);  // bit-exact

  const carbmon::BoundarySpec three = carbmon::calibrate(12, 0.10, "sqrt",
                                                         30000, 777, 3);
  CHECK(one.c == three.c);
}

TEST_CASE("same inputs replay the same constant") {
  const double a = carbmon::calibrate(7, 0.25, "sqrt", 20000, 123).c;
  const double b = carbmon::calibrate(7, 0.25, "sqrt", 20000, 123).c;
  CHECK(a == b);
  const double other_seed = carbmon::calibrate(7, 0.25, "sqrt", 20000, 124).c;
  CHECK(a != other_seed);
}

TEST_CASE("table rows share one simulation and scale by sqrt(t)") {
  const std::vector<double> alphas{0.05, 0.10, 0.32};
  const carbmon::CriticalValueTable table =
      carbmon::critical_value_table(30, alphas, 10, 50000, 20210524, 2020);

  REQUIRE(table.alphas.size() == 3);
  REQUIRE(table.cells.size() == 3);
  REQUIRE(table.constants.size() == 3);
  CHECK(table.start_year == 2020);
  for (std::size_t r = 0; r < 3; ++r) {
    REQUIRE(table.cells[r].size() == 10);
    for (int t = 1; t <= 10; ++t) {
      CHECK(table.cells[r][std::size_t(t - 1)] ==
            doctest::Approx(table.constants[r] * std::sqrt(double(t)))
                .epsilon(1e-15));
    }
  }

  // Each row equals the standalone calibration at the same seed.
  const double lone = carbmon::calibrate(30, 0.10, "sqrt", 50000, 20210524).c;
  CHECK(table.constants[1] == lone);

  try {
    carbmon::critical_value_table(30, alphas, 31, 1000);
    FAIL("expected invalid_horizon");
  } catch (const carbmon::error& e) {
    CHECK(e.code() == errc::invalid_horizon);
  }
}

TEST_CASE("cache stores and replays constants bit-exactly") {
  const std::filesystem::path file = temp_file("carbmon_test_cache.txt");
  std::filesystem::remove(file);

  CHECK_FALSE(carbmon::cache_lookup(file, 30, 0.05, "sqrt", 1000, 1)
                  .has_value());

  const carbmon::BoundarySpec spec = carbmon::calibrate(30, 0.05, "sqrt",
                                                        1000, 1);
  carbmon::cache_store(file, spec);
  const auto hit = carbmon::cache_lookup(file, 30, 0.05, "sqrt", 1000, 1);
  REQUIRE(hit.has_value());
  CHECK(*hit == spec.c);

  // Different keys miss.
  CHECK_FALSE(carbmon::cache_lookup(file, 30, 0.10, "sqrt", 1000, 1)
                  .has_value());
  CHECK_FALSE(carbmon::cache_lookup(file, 29, 0.05, "sqrt", 1000, 1)
                  .has_value());
  CHECK_FALSE(carbmon::cache_lookup(file, 30, 0.05, "sqrt", 1001, 1)
                  .has_value());
  CHECK_FALSE(carbmon::cache_lookup(file, 30, 0.05, "sqrt", 1000, 2)
                  .has_value());

  // Storing the same entry twice stays a single line.
  carbmon::cache_store(file, spec);
  std::ifstream in(file);
  int lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 1);

  std::filesystem::remove(file);
}

TEST_CASE("malformed cache lines are skipped, not fatal") {
  const std::filesystem::path file = temp_file("carbmon_test_cache_bad.txt");
  {
    std::ofstream out(file);
    out << "this is not a cache line\n";
    out << "T=30,alpha=0.05,f=sqrt,B=notanumber,seed=1,c=2.5\n";
    out << "T=30,alpha=0.05,f=sqrt,B=1000,seed=1,c=2.5\n";
  }
  const auto hit = carbmon::cache_lookup(file, 30, 0.05, "sqrt", 1000, 1);
  REQUIRE(hit.has_value());
  CHECK(*hit == 2.5);
  std::filesystem::remove(file);
}

TEST_SUITE_END();
