#include <catch2/catch_amalgamated.hpp>

#include "fbz/pipeline.hpp"

using namespace fbz;

TEST_CASE("matched scale functions reproduce the walk dimensions") {
  CHECK(matched_scale(FractalKind::interval, 2.0).power_exponent() ==
        Catch::Approx(2.0).epsilon(1e-12));
  CHECK(matched_scale(FractalKind::interval, 3.0).power_exponent() ==
        Catch::Approx(3.0).epsilon(1e-12));
  CHECK(matched_scale(FractalKind::square, 2.0).power_exponent() ==
        Catch::Approx(2.0).epsilon(1e-12));
  CHECK(matched_scale(FractalKind::gasket, 2.0).power_exponent() ==
        Catch::Approx(std::log(5.0) / std::log(2.0)).epsilon(1e-12));
  CHECK(matched_scale(FractalKind::vicsek, 2.0).power_exponent() ==
        Catch::Approx(std::log(15.0) / std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("capacity scaling pipeline on the vicsek set") {
  auto scal = capacity_scaling(FractalKind::vicsek, 2.0, 1, 3);
  CHECK(scal.rho == Catch::Approx(1.0 / 3.0).epsilon(1e-7));
  CHECK(scal.beta == Catch::Approx(std::log(15.0) / std::log(3.0)).epsilon(1e-6));
  CHECK(scal.alpha == Catch::Approx(1.23248676).epsilon(1e-5));
}

TEST_CASE("test bank samples the same functions at every level") {
  TestBank banks[2];
  Prefractal fr[2] = {build_fractal(FractalKind::interval, 8),
                      build_fractal(FractalKind::interval, 10)};
  for (int i = 0; i < 2; ++i) {
    auto form = build_form(fr[i], 2.0, WeightMode::unit);
    banks[i] = make_test_bank(fr[i], form, 2, 99);
  }
  REQUIRE(banks[0].names == banks[1].names);
  REQUIRE(banks[0].names.size() == 4);  // coord, capacity, two noise fields
  // compare the noise values at shared vertices (coarse level ids map by 4x)
  for (std::size_t b = 2; b < 4; ++b) {
    double worst = 0.0;
    for (int v = 0; v < fr[0].space.size(); ++v) {
      int w = 4 * v;  // same coordinate at level 10
      REQUIRE(fr[1].space.coord(w)[0] == fr[0].space.coord(v)[0]);
      worst = std::max(worst,
                       std::abs(banks[0].fns[b][v] - banks[1].fns[b][w]));
    }
    // same continuum field sampled at both levels, up to smoothing resolution
    CHECK(worst < 0.2);
  }
}

TEST_CASE("comparability rows are finite and ordered") {
  auto f = build_fractal(FractalKind::interval, 9);
  auto form = build_form(f, 2.0, WeightMode::renormalized);
  auto psi = matched_scale(FractalKind::interval, 2.0);
  auto bank = make_test_bank(f, form, 1, 3);
  auto rows = comparability_rows(f, form, psi, 16.0 * f.lattice_h, bank, 2);
  REQUIRE(rows.size() == bank.fns.size());
  for (auto& row : rows) {
    CHECK(std::isfinite(row.ratio));
    CHECK(row.ratio > 0.0);
    CHECK(row.gamma_mass > 0.0);
  }
}
