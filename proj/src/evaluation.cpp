#include "chfkit/evaluation.hpp"

#include "chfkit/csv.hpp"
#include "chfkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

namespace chfkit {

namespace {

double rel_err(double pred, double truth) { return (pred - truth) / truth * 100.0; }

} // namespace

RelativeErrors relative_errors(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw ValidationError("prediction and truth lengths differ");
  RelativeErrors out;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    if (truth[k] == 0.0) {
      ++out.zero_truth;
      continue;
    }
    out.errors.push_back(rel_err(pred[k], truth[k]));
    out.index.push_back(k);
  }
  return out;
}

std::size_t nearest_rank_keep(std::size_t n, double quantile) {
  if (n == 0) return 0;
  const double rank = std::ceil(quantile * static_cast<double>(n) - 1e-9);
  return std::clamp(static_cast<std::size_t>(std::max(rank, 1.0)), std::size_t{1}, n);
}

EvalReport compute_report(std::span<const double> pred, std::span<const double> truth,
                          double trim_quantile) {
  if (!(trim_quantile > 0.0 && trim_quantile <= 1.0)) {
    throw ValidationError("trim quantile must be in (0, 1]");
  }
  const auto re = relative_errors(pred, truth);
  EvalReport r;
  r.n_total = re.errors.size();
  r.n_zero_truth = re.zero_truth;
  if (r.n_total == 0) throw ValidationError("no points with nonzero truth");

  std::vector<double> kept; // |e| of nonzero predictions
  std::size_t gt10 = 0, gt25 = 0;
  for (std::size_t k = 0; k < re.errors.size(); ++k) {
    const double a = std::abs(re.errors[k]);
    r.max_rel_error = std::max(r.max_rel_error, a);
    gt10 += a > 10.0;
    gt25 += a > 25.0;
    if (pred[re.index[k]] == 0.0) ++r.n_zero_pred;
    else kept.push_back(a);
  }
  r.frac_gt_10 = 100.0 * static_cast<double>(gt10) / static_cast<double>(r.n_total);
  r.frac_gt_25 = 100.0 * static_cast<double>(gt25) / static_cast<double>(r.n_total);
  if (kept.empty()) return r;

  std::stable_sort(kept.begin(), kept.end());
  const std::size_t keep = nearest_rank_keep(kept.size(), trim_quantile);
  r.n_trimmed = kept.size() - keep;
  kept.resize(keep);
  const auto n = static_cast<double>(keep);
  double sum = 0.0, sq = 0.0;
  for (double a : kept) {
    sum += a;
    sq += a * a;
  }
  r.mean_rel_error = sum / n;
  double var = 0.0;
  for (double a : kept) var += (a - r.mean_rel_error) * (a - r.mean_rel_error);
  r.std_rel_error = std::sqrt(var / n);
  r.rrmse = std::sqrt(sq / n);
  return r;
}

double silverman_bandwidth(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("KDE needs at least 2 points");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double s = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(s > 0.0)) throw ValidationError("KDE of a zero-variance sample");
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  const double spread = iqr > 0.0 ? std::min(s, iqr / 1.34) : s;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

KdeSeries kde(std::span<const double> errors, const KdeOptions& opts) {
  KdeSeries k;
  k.bandwidth = silverman_bandwidth(errors);
  if (opts.points < 2) throw ValidationError("KDE grid needs at least 2 points");
  double lo, hi;
  if (opts.window) {
    std::tie(lo, hi) = *opts.window;
    if (!(hi > lo)) throw ValidationError("KDE window must have hi > lo");
  } else {
    const auto [mn, mx] = std::minmax_element(errors.begin(), errors.end());
    lo = *mn - opts.pad_bandwidths * k.bandwidth;
    hi = *mx + opts.pad_bandwidths * k.bandwidth;
  }
  const double h = k.bandwidth;
  const double norm = 1.0 / (static_cast<double>(errors.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  k.grid.resize(opts.points);
  k.density.resize(opts.points);
  const auto np = static_cast<std::ptrdiff_t>(opts.points);
#pragma omp parallel for
  for (std::ptrdiff_t g = 0; g < np; ++g) {
    const auto i = static_cast<std::size_t>(g);
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(opts.points - 1);
    double s = 0.0;
    for (double e : errors) {
      const double u = (x - e) / h;
      s += std::exp(-0.5 * u * u);
    }
    k.grid[i] = x;
    k.density[i] = s * norm;
  }
  return k;
}

std::vector<ParityRow> parity_series(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw ValidationError("prediction and truth lengths differ");
  std::vector<ParityRow> rows;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    rows.push_back({truth[k], pred[k], truth[k] == 0.0 ? NAN : rel_err(pred[k], truth[k])});
  }
  return rows;
}

std::string format_report_csv(const EvalReport& r) {
  std::string out = "metric,value\n";
  auto add = [&](const char* k, double v) { out += std::string(k) + ',' + csv::format(v) + '\n'; };
  add("mean_rel_error_pct", r.mean_rel_error);
  add("max_rel_error_pct", r.max_rel_error);
  add("std_rel_error_pct", r.std_rel_error);
  add("rrmse_pct", r.rrmse);
  add("frac_gt_10_pct", r.frac_gt_10);
  add("frac_gt_25_pct", r.frac_gt_25);
  add("n_total", static_cast<double>(r.n_total));
  add("n_zero_truth", static_cast<double>(r.n_zero_truth));
  add("n_zero_pred", static_cast<double>(r.n_zero_pred));
  add("n_trimmed", static_cast<double>(r.n_trimmed));
  out += std::string("trimmed_metrics,\"") + EvalReport::trimmed_metrics + "\"\n";
  return out;
}

std::string format_report_table(const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::size_t w = 5;
  for (const auto& [name, r] : rows) w = std::max(w, name.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %9s %9s %9s %9s %9s %9s\n", static_cast<int>(w), "Model", "mu [%]",
                "Max [%]", "sigma [%]", "rRMSE [%]", "F>10 [%]", "F>25 [%]");
  out += buf;
  for (const auto& [name, r] : rows) {
    std::snprintf(buf, sizeof buf, "%-*s %9.2f %9.2f %9.2f %9.2f %9.2f %9.2f\n", static_cast<int>(w),
                  name.c_str(), r.mean_rel_error, r.max_rel_error, r.std_rel_error, r.rrmse, r.frac_gt_10,
                  r.frac_gt_25);
    out += buf;
  }
  return out;
}

std::string format_parity_csv(const std::vector<ParityRow>& rows) {
  std::string out = "truth_kW_m2,pred_kW_m2,rel_err_pct\n";
  for (const auto& r : rows) {
    out += csv::format(r.truth / 1000.0) + ',' + csv::format(r.pred / 1000.0) + ',' +
           (std::isnan(r.rel_err_pct) ? std::string() : csv::format(r.rel_err_pct)) + '\n';
  }
  return out;
}

std::string format_kde_csv(const KdeSeries& k) {
  std::string out = "x_pct,density\n";
  for (std::size_t i = 0; i < k.grid.size(); ++i) {
    out += csv::format(k.grid[i]) + ',' + csv::format(k.density[i]) + '\n';
  }
  return out;
}

} // namespace chfkit
