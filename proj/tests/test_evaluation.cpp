#include "chfkit/evaluation.hpp"

#include "chfkit/errors.hpp"
#include "chfkit/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace chfkit;

namespace {

// Truth 100 everywhere so predictions read directly as 100 + e.
EvalReport report_for(const std::vector<double>& errors_pct, double q = 1.0) {
  std::vector<double> pred, truth;
  for (double e : errors_pct) {
    truth.push_back(100.0);
    pred.push_back(100.0 + e);
  }
  return compute_report(pred, truth, q);
}

} // namespace

TEST_CASE("relative errors are signed percentages") {
  const std::vector<double> truth = {100, 200, 50};
  CHECK(relative_errors(truth, truth).errors == std::vector<double>{0, 0, 0});
  const std::vector<double> up = {110, 220, 55};
  for (double e : relative_errors(up, truth).errors) CHECK(e == doctest::Approx(10.0).epsilon(1e-14));
  const std::vector<double> p = {90}, t = {100};
  CHECK(relative_errors(p, t).errors.front() == doctest::Approx(-10.0).epsilon(1e-14));
  const std::vector<double> short_p = {1};
  CHECK_THROWS_AS(relative_errors(short_p, truth), ValidationError);
}

TEST_CASE("hand arithmetic fixtures") {
  SUBCASE("10% and 20%") {
    const auto r = report_for({10.0, 20.0});
    CHECK(r.rrmse == doctest::Approx(15.811388300841896).epsilon(1e-9));
    CHECK(r.mean_rel_error == doctest::Approx(15.0).epsilon(1e-9));
    CHECK(r.std_rel_error == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(r.max_rel_error == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(r.frac_gt_10 == doctest::Approx(50.0).epsilon(1e-9));
    CHECK(r.frac_gt_25 == 0.0);
    CHECK(r.n_trimmed == 0);
  }
  SUBCASE("signs do not matter for magnitudes") {
    const auto r = report_for({-10.0, 20.0});
    CHECK(r.rrmse == doctest::Approx(15.811388300841896).epsilon(1e-9));
    CHECK(r.mean_rel_error == doctest::Approx(15.0).epsilon(1e-9));
  }
  SUBCASE("single point") {
    const auto r = report_for({30.0}, 0.995);
    CHECK(r.mean_rel_error == doctest::Approx(30.0).epsilon(1e-9));
    CHECK(r.max_rel_error == doctest::Approx(30.0).epsilon(1e-9));
    CHECK(r.rrmse == doctest::Approx(30.0).epsilon(1e-9));
    CHECK(r.std_rel_error == 0.0);
    CHECK(r.frac_gt_10 == 100.0);
    CHECK(r.frac_gt_25 == 100.0);
    CHECK(r.n_trimmed == 0);
  }
  SUBCASE("zero predictions count for max and F only") {
    const std::vector<double> pred = {0.0, 105.0, 90.0}, truth = {100.0, 100.0, 100.0};
    const auto r = compute_report(pred, truth, 1.0);
    CHECK(r.n_zero_pred == 1);
    CHECK(r.max_rel_error == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(r.frac_gt_25 == doctest::Approx(100.0 / 3.0).epsilon(1e-12));
    CHECK(r.mean_rel_error == doctest::Approx(7.5).epsilon(1e-9));
  }
  SUBCASE("zero truths are excluded and counted") {
    const std::vector<double> pred = {5.0, 110.0}, truth = {0.0, 100.0};
    const auto r = compute_report(pred, truth, 1.0);
    CHECK(r.n_zero_truth == 1);
    CHECK(r.n_total == 1);
    CHECK(r.rrmse == doctest::Approx(10.0).epsilon(1e-9));
  }
}

TEST_CASE("nearest-rank trimming of the test partition drops 12 of 2458") {
  CHECK(nearest_rank_keep(2458, 0.995) == 2446);
  CHECK(nearest_rank_keep(200, 0.995) == 199);
  CHECK(nearest_rank_keep(1, 0.995) == 1);
  CHECK(nearest_rank_keep(10, 1.0) == 10);
  Rng rng(1);
  std::vector<double> e(2458);
  for (auto& v : e) v = rng.uniform(-40, 40);
  const auto r = report_for(e, 0.995);
  CHECK(r.n_trimmed == 12);
  CHECK(r.n_total == 2458);
}

TEST_CASE("metric properties over random batches") {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.index(300);
    std::vector<double> pred(n), truth(n);
    for (std::size_t k = 0; k < n; ++k) {
      truth[k] = rng.uniform(50e3, 16e6);
      pred[k] = truth[k] * (1.0 + rng.uniform(-0.6, 0.6));
    }
    const auto r = compute_report(pred, truth);
    // Scale invariance.
    const double c = std::exp(rng.uniform(-10, 10));
    std::vector<double> sp(n), st(n);
    for (std::size_t k = 0; k < n; ++k) {
      sp[k] = pred[k] * c;
      st[k] = truth[k] * c;
    }
    const auto s = compute_report(sp, st);
    CHECK(s.rrmse == doctest::Approx(r.rrmse).epsilon(1e-12));
    CHECK(s.mean_rel_error == doctest::Approx(r.mean_rel_error).epsilon(1e-12));
    CHECK(s.max_rel_error == doctest::Approx(r.max_rel_error).epsilon(1e-12));
    CHECK(s.frac_gt_10 == r.frac_gt_10);
    // Trimming only lowers rRMSE.
    const auto u = compute_report(pred, truth, 1.0);
    CHECK(r.rrmse <= u.rrmse);
    CHECK(r.max_rel_error == u.max_rel_error);
    // F-fractions by direct counting; rRMSE^2 = mu^2 + sigma^2.
    std::size_t c10 = 0, c25 = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double e = std::abs((pred[k] - truth[k]) / truth[k] * 100.0);
      c10 += e > 10.0;
      c25 += e > 25.0;
    }
    CHECK(r.frac_gt_10 == doctest::Approx(100.0 * c10 / n).epsilon(1e-12));
    CHECK(r.frac_gt_25 == doctest::Approx(100.0 * c25 / n).epsilon(1e-12));
    CHECK(r.frac_gt_25 <= r.frac_gt_10);
    CHECK(r.rrmse * r.rrmse ==
          doctest::Approx(r.mean_rel_error * r.mean_rel_error + r.std_rel_error * r.std_rel_error).epsilon(1e-9));
  }
}

TEST_CASE("silverman bandwidth closed form") {
  // 50 points at -a and 50 at +a: sample std 1, IQR / 1.34 > 1.
  const double a = std::sqrt(0.99);
  std::vector<double> x;
  for (int k = 0; k < 50; ++k) {
    x.push_back(-a);
    x.push_back(a);
  }
  CHECK(silverman_bandwidth(x) == doctest::Approx(0.3582964534981475).epsilon(1e-12));
  // Narrow IQR: the robust spread takes over.
  std::vector<double> y = {0, 0, 0, 0, 0.1, 0.2, 0.3, 10};
  const double h = silverman_bandwidth(y);
  CHECK(h == doctest::Approx(0.9 * (0.225 / 1.34) * std::pow(8.0, -0.2)).epsilon(1e-12));
  const std::vector<double> flat = {3, 3, 3};
  CHECK_THROWS_AS(silverman_bandwidth(flat), ValidationError);
}

TEST_CASE("kde normalization and symmetry") {
  Rng rng(3);
  std::vector<double> e;
  for (int k = 0; k < 200; ++k) {
    const double v = rng.uniform(-30, 30) * rng.uniform();
    e.push_back(v);
    e.push_back(-v);
  }
  KdeOptions o;
  o.pad_bandwidths = 5.0;
  const auto k = kde(e, o);
  REQUIRE(k.grid.size() == 512);
  double area = 0.0;
  for (std::size_t i = 1; i < k.grid.size(); ++i) {
    area += 0.5 * (k.density[i] + k.density[i - 1]) * (k.grid[i] - k.grid[i - 1]);
  }
  CHECK(area == doctest::Approx(1.0).epsilon(1e-3));
  for (std::size_t i = 0; i < k.grid.size(); ++i) {
    CHECK(std::abs(k.density[i] - k.density[511 - i]) < 1e-9);
    CHECK(k.density[i] >= 0.0);
  }
  const auto d = kde(e);
  double area3 = 0.0;
  for (std::size_t i = 1; i < d.grid.size(); ++i) {
    area3 += 0.5 * (d.density[i] + d.density[i - 1]) * (d.grid[i] - d.grid[i - 1]);
  }
  CHECK(area3 == doctest::Approx(1.0).epsilon(1e-3));
  o.window = std::pair{-100.0, 100.0};
  const auto w = kde(e, o);
  CHECK(w.grid.front() == -100.0);
  CHECK(w.grid.back() == 100.0);
}

TEST_CASE("parity series") {
  const std::vector<double> t = {1000, 2000, 3000};
  const auto same = parity_series(t, t);
  REQUIRE(same.size() == 3);
  for (const auto& r : same) CHECK(r.pred == r.truth);
  const std::vector<double> p = {1100, 1800, 3000};
  const auto rows = parity_series(p, t);
  const auto re = relative_errors(p, t);
  for (std::size_t k = 0; k < 3; ++k) CHECK(rows[k].rel_err_pct == re.errors[k]);
  CHECK(format_parity_csv(rows).rfind("truth_kW_m2,pred_kW_m2,rel_err_pct\n1,1.1,10", 0) == 0);
}

TEST_CASE("report exports") {
  const auto r = report_for({10.0, 20.0});
  const auto csv = format_report_csv(r);
  CHECK(csv.find("rrmse_pct,15.8113883008") != std::string::npos);
  const auto table = format_report_table({{"Bowring", r}});
  CHECK(table.find("Bowring") != std::string::npos);
  CHECK(table.find("15.81") != std::string::npos);
}
