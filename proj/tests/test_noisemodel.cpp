#include <catch_amalgamated.hpp>

#include <random>

#include "circrx/noisemodel.hpp"

using namespace circrx;
using Catch::Approx;

TEST_CASE("reflection coefficient of the balance port", "[noisemodel]") {
  CHECK(std::abs(gamma_of(std::nullopt, 50.0) - cplx(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(gamma_of(cplx(50.0, 0.0), 50.0)) < 1e-15);
  CHECK(gamma_of(cplx(0.0, 0.0), 50.0).real() == Approx(-1.0));
  CHECK(gamma_of(cplx(150.0, 0.0), 50.0).real() == Approx(0.5));
  CHECK_THROWS_AS(gamma_of(cplx(-50.0, 0.0), 50.0), std::domain_error);
}

TEST_CASE("noise transfer coefficients at canonical balance settings",
          "[noisemodel]") {
  circulator_params p;  // open balance, rsw = 3.5
  const auto nb = noise_at_gyrator(p);
  const double r = 3.5 / 50.0;
  CHECK(nb.coef_sw_left ==
        Approx(std::pow(1.0 - 1.0 / (1.0 + r), 2) / 4.0).epsilon(1e-12));
  CHECK(nb.coef_sw_left == Approx(1.069e-3).margin(2e-6));
  CHECK(nb.coef_ant == Approx(nb.coef_sw_right).epsilon(1e-15));
  CHECK(nb.coef_bal == Approx(0.0).margin(1e-15));
  CHECK(nb.bal == 0.0);

  circulator_params pm = p;
  pm.zbal = cplx(50.0, 0.0);
  const auto nm = noise_at_gyrator(pm);
  CHECK(nm.coef_ant == Approx(0.25).epsilon(1e-12));
  CHECK(nm.coef_sw_left == Approx(0.25).epsilon(1e-12));
  CHECK(nm.coef_sw_right == Approx(0.25).epsilon(1e-12));
  CHECK(nm.coef_bal == Approx(0.25).epsilon(1e-12));
}

TEST_CASE("antenna and right-switch coefficients coincide for any balance",
          "[noisemodel]") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> zr(1.0, 300.0);
  std::uniform_real_distribution<double> zi(-100.0, 100.0);
  for (int trial = 0; trial < 30; ++trial) {
    circulator_params p;
    p.zbal = cplx(zr(rng), zi(rng));
    const auto nb = noise_at_gyrator(p);
    CHECK(nb.coef_ant == Approx(nb.coef_sw_right).epsilon(1e-12));
  }
}

TEST_CASE("noise factor anchors", "[noisemodel]") {
  circulator_params p;  // open balance
  const auto open = noise_factor(p);
  CHECK(open.nf_db == Approx(0.2942).margin(1e-3));
  CHECK(open.f == Approx(1.0701).margin(2e-4));

  circulator_params pm = p;
  pm.zbal = cplx(50.0, 0.0);
  const auto matched = noise_factor(pm);
  CHECK(matched.nf_db == Approx(3.3041).margin(1e-3));
  CHECK(matched.f == Approx(2.14).margin(1e-3));

  CHECK(matched.nf_db - open.nf_db == Approx(3.0).margin(0.1));
}

TEST_CASE("noise factor limits", "[noisemodel]") {
  circulator_params p0;
  p0.rsw = 0.0;
  CHECK(noise_factor(p0).f == Approx(1.0).epsilon(1e-12));  // open balance

  circulator_params plarge;
  plarge.zbal = cplx(1e9, 0.0);
  CHECK(noise_factor(plarge).nf_db == Approx(0.2942).margin(1e-3));

  // zero-temperature sources are silent
  circulator_params pm;
  pm.zbal = cplx(50.0, 0.0);
  CHECK(noise_at_gyrator(pm, 0.0).total() == 0.0);
}

TEST_CASE("noise factor decomposition is consistent", "[noisemodel]") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> zr(1.0, 400.0);
  for (int trial = 0; trial < 25; ++trial) {
    circulator_params p;
    p.zbal = cplx(zr(rng), 0.0);
    const auto nf = noise_factor(p);
    CHECK(nf.f == Approx(nf.term_ant + nf.term_sw_left + nf.term_sw_right +
                         nf.term_bal)
                      .epsilon(1e-12));
    CHECK(nf.f >= 1.0);
  }
}

TEST_CASE("nf is non-increasing in zbal while isolation peaks at 50",
          "[noisemodel]") {
  circulator_params base;
  const auto grid = linspace(10.0, 200.0, 39);
  const auto rows = nf_vs_zbal_curve(base, grid);
  REQUIRE(rows.size() == 39);
  for (size_t i = 0; i + 1 < rows.size(); ++i) {
    CHECK(rows[i].nf_db >= rows[i + 1].nf_db - 1e-12);
  }
  // bal-source coefficient falls toward 0 as zbal -> open
  CHECK(rows.front().coef_bal > rows.back().coef_bal);

  // meanwhile the TX leakage |v1| is minimized exactly at the 50-ohm balance:
  // the two optima are distinct (trade-off between isolation and NF)
  double best_v1 = 1e9, best_zb = 0.0;
  for (double zb : grid) {
    circulator_params p = base;
    p.zbal = cplx(zb, 0.0);
    const double v1 = std::abs(tx_excitation(p, cplx(2.0, 0.0)).v1);
    if (v1 < best_v1) {
      best_v1 = v1;
      best_zb = zb;
    }
  }
  CHECK(best_zb == Approx(50.0));
  CHECK(rows.front().nf_db > rows.back().nf_db);
}

TEST_CASE("mismatched antenna is rejected", "[noisemodel]") {
  circulator_params p;
  p.zant = cplx(60.0, 0.0);
  CHECK_THROWS_AS(noise_at_gyrator(p), std::invalid_argument);
  CHECK_THROWS_AS(noise_factor(p), std::invalid_argument);
}

TEST_CASE("curve rejects negative grid entries", "[noisemodel]") {
  circulator_params p;
  const double bad[] = {10.0, -1.0};
  CHECK_THROWS_AS(nf_vs_zbal_curve(p, bad), std::invalid_argument);
}
