#include "chfkit/correlations.hpp"

#include "chfkit/errors.hpp"
#include "chfkit/if97.hpp"
#include "chfkit/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace chfkit;

namespace {

// Database ranges drawn uniformly, with positive subcooling so both
// correlations have a critical condition.
InletConditions random_inlet(Rng& rng) {
  return {rng.uniform(0.002, 0.016), rng.uniform(0.05, 20.0), rng.uniform(0.1e6, 20e6),
          rng.uniform(8.0, 7964.0), rng.uniform(0.0, 1644e3)};
}

// Plain bisection on the heat balance, kept separate from solve_hbm.
double bisection_oracle(Correlation corr, const InletConditions& c, double tol) {
  const double h_fg = if97::saturation_state(c.pressure).h_fg;
  auto f = [&](double q) {
    const double x = 4.0 * q * c.heated_length / (c.mass_flux * c.diameter * h_fg) -
                     c.inlet_subcooling / h_fg;
    return q - evaluate_dsm(corr, {c.diameter, c.pressure, c.mass_flux, x}).chf;
  };
  double lo = 1.0, hi = 2e7;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("Biasi closed form against hand evaluation") {
  // 1.883e3 / (D^n G^(1/6)) [F/G^(1/6) - x] in cgs, evaluated with mpmath.
  const auto v = biasi_dsm({0.01, 7.0e6, 1000.0, 0.2});
  CHECK(v.chf == doctest::Approx(4185687.0915093497).epsilon(1e-12));
  CHECK_FALSE(v.nonpositive);
  CHECK(v.chf == doctest::Approx(4.19e6).epsilon(2e-3));
}

TEST_CASE("Biasi branch zeros") {
  const double p = 7.0e6, g = 1000.0, d = 0.01;
  const double pb = p / 1e5;
  const double f = 0.7249 + 0.099 * pb * std::exp(-0.032 * pb);
  const double g16 = std::pow(0.1 * g, -1.0 / 6.0);
  // At the low-quality zero crossing only the high-quality branch remains.
  const double x0 = f * g16;
  const auto at_zero = biasi_dsm({d, p, g, x0});
  const double h = -1.159 + 0.149 * pb * std::exp(-0.019 * pb) + 8.99 * pb / (10.0 + pb * pb);
  const double q_high = 1e4 * 3.78e3 * h * std::pow(100 * d, -0.4) * std::pow(0.1 * g, -0.6) * (1 - x0);
  CHECK(at_zero.chf == doctest::Approx(q_high).epsilon(1e-12));

  // x = 1 zeroes the high-quality branch; at low G it is the only branch.
  const auto dry = biasi_dsm({d, p, 200.0, 1.0});
  CHECK(dry.chf == 0.0);
  CHECK(dry.nonpositive);
  const auto beyond = biasi_dsm({d, p, 200.0, 1.2});
  CHECK(beyond.chf < 0.0);
  CHECK(beyond.nonpositive);
}

TEST_CASE("Biasi low mass flux uses the high-quality branch only") {
  const double p = 7.0e6, d = 0.01;
  const auto low_g = biasi_dsm({d, p, 300.0, -0.3});
  const double pb = p / 1e5;
  const double h = -1.159 + 0.149 * pb * std::exp(-0.019 * pb) + 8.99 * pb / (10.0 + pb * pb);
  CHECK(low_g.chf == doctest::Approx(1e4 * 3.78e3 * h * std::pow(1.0, -0.4) *
                                     std::pow(30.0, -0.6) * 1.3)
                         .epsilon(1e-12));
}

TEST_CASE("Bowring inlet form regression anchor") {
  // p_R = 1 makes every pressure function 1; h_fg from python iapws.
  const InletConditions c{0.01262, 5.56, 6.895e6, 1000.0, 100e3};
  const auto v = bowring_inlet(c);
  CHECK(v.chf == doctest::Approx(716708.48142840739).epsilon(1e-7));
  CHECK_FALSE(v.nonpositive);
}

TEST_CASE("Bowring inlet form limits") {
  InletConditions c{0.01, 2.0, 7e6, 2000.0, 0.0};
  const double h_fg = if97::saturation_state(c.pressure).h_fg;
  // With zero subcooling the inlet form reduces to A/(C+L); recover A and C
  // from two lengths and check consistency with a third.
  const double q1 = bowring_inlet(c).chf;
  c.heated_length = 4.0;
  const double q2 = bowring_inlet(c).chf;
  const double cc = (q2 * 4.0 - q1 * 2.0) / (q1 - q2);
  const double a = q1 * (cc + 2.0);
  c.heated_length = 7.0;
  CHECK(bowring_inlet(c).chf == doctest::Approx(a / (cc + 7.0)).epsilon(1e-12));
  // DSM at x = 0 is A/C.
  CHECK(bowring_dsm({c.diameter, c.pressure, c.mass_flux, 0.0}).chf ==
        doctest::Approx(a / cc).epsilon(1e-10));
  (void)h_fg;

  double prev = INFINITY;
  for (double l = 0.1; l < 20.0; l += 0.5) {
    c.heated_length = l;
    c.inlet_subcooling = 150e3;
    const double q = bowring_inlet(c).chf;
    CHECK(q < prev);
    prev = q;
  }
}

TEST_CASE("Bowring DSM is the heat-balance rearrangement of the inlet form") {
  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    const auto c = random_inlet(rng);
    const auto inlet = bowring_inlet(c);
    if (inlet.nonpositive) continue;
    const double h_fg = if97::saturation_state(c.pressure).h_fg;
    const double x = heat_balance_quality(c, inlet.chf, h_fg);
    const auto dsm = bowring_dsm({c.diameter, c.pressure, c.mass_flux, x});
    CHECK(dsm.chf == doctest::Approx(inlet.chf).epsilon(1e-9));
  }
  // x = 0 case: subcooling chosen so the quality at L vanishes.
  InletConditions c{0.008, 3.0, 10e6, 3000.0, 0.0};
  const double h_fg = if97::saturation_state(c.pressure).h_fg;
  const double q_dsm = bowring_dsm({c.diameter, c.pressure, c.mass_flux, 0.0}).chf;
  c.inlet_subcooling = 4.0 * q_dsm * c.heated_length / (c.mass_flux * c.diameter);
  CHECK(heat_balance_quality(c, q_dsm, h_fg) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(bowring_inlet(c).chf == doctest::Approx(q_dsm).epsilon(1e-12));
}

TEST_CASE("DSM is nonincreasing in quality") {
  // Below ~1.3 bar Biasi's H(p) turns negative and its high-quality branch
  // rises with x, so pressures are drawn inside each published envelope.
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const double d = rng.uniform(0.002, 0.016);
    const double g = rng.uniform(8.0, 7964.0);
    for (auto corr : {Correlation::biasi, Correlation::bowring}) {
      const double p = corr == Correlation::biasi ? rng.uniform(0.27e6, 14e6)
                                                  : rng.uniform(0.2e6, 19e6);
      double prev = INFINITY;
      for (int i = 0; i < 50; ++i) {
        const double x = -0.5 + 1.5 * i / 49.0;
        const auto v = evaluate_dsm(corr, {d, p, g, x});
        CHECK(std::isfinite(v.chf));
        CHECK(v.chf <= prev);
        CHECK(v.nonpositive == !(v.chf > 0.0));
        prev = v.chf;
      }
    }
  }
}

TEST_CASE("invalid conditions are rejected") {
  CHECK_THROWS_AS(biasi_dsm({0.0, 7e6, 1000, 0.1}), DomainError);
  CHECK_THROWS_AS(bowring_dsm({0.01, 7e6, -5, 0.1}), DomainError);
  CHECK_THROWS_AS(bowring_inlet({0.01, 0.0, 7e6, 1000, 0}), DomainError);
  CHECK_THROWS_AS(bowring_dsm({0.01, 30e6, 1000, 0.1}), DomainError);
  CHECK_THROWS_AS(biasi_dsm({0.01, 7e6, 1000, NAN}), DomainError);
}

TEST_CASE("validity envelope is metadata, not a guard") {
  const auto v = biasi_dsm({0.05, 7e6, 1000, 0.1});
  CHECK(v.outside_validity);
  CHECK(std::isfinite(v.chf));
  CHECK_FALSE(biasi_dsm({0.01, 7e6, 1000, 0.1}).outside_validity);
}

TEST_CASE("HBM recovers a constructed fixed point") {
  for (auto corr : {Correlation::biasi, Correlation::bowring}) {
    for (double x_star : {-0.2, 0.1, 0.4, 0.7}) {
      InletConditions c{0.01, 3.0, 7e6, 1500.0, 0.0};
      const double h_fg = if97::saturation_state(c.pressure).h_fg;
      const double q_star = evaluate_dsm(corr, {c.diameter, c.pressure, c.mass_flux, x_star}).chf;
      c.inlet_subcooling = 4.0 * q_star * c.heated_length / (c.mass_flux * c.diameter) - x_star * h_fg;
      const auto sol = solve_hbm(corr, c);
      CAPTURE(x_star);
      CHECK(std::abs(sol.chf - q_star) < 1.0);
      CHECK(sol.critical_quality == doctest::Approx(x_star).epsilon(1e-6));
    }
  }
}

TEST_CASE("HBM Bowring matches the inlet closed form") {
  Rng rng(5);
  int solved = 0;
  for (int k = 0; k < 200; ++k) {
    const auto c = random_inlet(rng);
    const auto inlet = bowring_inlet(c);
    if (inlet.nonpositive) {
      CHECK_THROWS_AS(solve_hbm(Correlation::bowring, c), NoCriticalCondition);
      continue;
    }
    const auto sol = solve_hbm(Correlation::bowring, c);
    CHECK(std::abs(sol.chf - inlet.chf) <= 1e-3 * inlet.chf);
    ++solved;
  }
  CHECK(solved > 150);
}

TEST_CASE("HBM Biasi on a Bennett-like tube") {
  const InletConditions c{0.01262, 5.56, 6.895e6, 2000.0, 100e3};
  const auto sol = solve_hbm(Correlation::biasi, c);
  const double oracle = bisection_oracle(Correlation::biasi, c, 1e-4);
  CHECK(std::abs(sol.residual) < 1.0);
  CHECK(sol.critical_quality > 0.0);
  CHECK(sol.critical_quality < 1.0);
  // Residual slope is >= 1, so |residual| < 1 bounds the flux error by 1.
  CHECK(std::abs(sol.chf - oracle) < 1.0);
  const double h_fg = if97::saturation_state(c.pressure).h_fg;
  CHECK(sol.critical_quality == heat_balance_quality(c, sol.chf, h_fg));
}

TEST_CASE("HBM residual invariant and DSM round trip") {
  Rng rng(17);
  for (int k = 0; k < 100; ++k) {
    const auto c = random_inlet(rng);
    for (auto corr : {Correlation::biasi, Correlation::bowring}) {
      HbmSolution sol;
      try {
        sol = solve_hbm(corr, c);
      } catch (const NoCriticalCondition&) {
        continue;
      }
      const double back = evaluate_dsm(corr, {c.diameter, c.pressure, c.mass_flux,
                                              sol.critical_quality})
                              .chf;
      CHECK(std::abs(sol.chf - back) < 1.0);
      CHECK(std::abs(sol.chf - back) <= 1e-6 * sol.chf);
      CHECK(sol.residual == sol.chf - back);
    }
  }
}

TEST_CASE("HBM reports a missing critical condition") {
  // Strongly negative subcooling: inlet already beyond dryout for Bowring.
  const InletConditions c{0.01, 2.0, 7e6, 1000.0, -1500e3};
  try {
    solve_hbm(Correlation::bowring, c);
    FAIL("expected NoCriticalCondition");
  } catch (const NoCriticalCondition& e) {
    CHECK(e.f_lo > 0.0);
    CHECK(e.q_lo == 1.0);
    CHECK(e.q_hi == 20e6);
  }
}
