#pragma once

// Relative-error metrics for CHF predictions, outlier trimming, parity
// series and Gaussian KDE of the signed errors.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace chfkit {

struct RelativeErrors {
  std::vector<double> errors;       // signed %, (pred - truth) / truth * 100
  std::vector<std::size_t> index;   // input position of each error
  std::size_t zero_truth = 0;       // excluded points
};

/// Throws ValidationError on length mismatch.
RelativeErrors relative_errors(std::span<const double> pred, std::span<const double> truth);

struct EvalReport {
  double mean_rel_error = 0.0; // %, mean |e| over kept points
  double max_rel_error = 0.0;  // %, over all points
  double std_rel_error = 0.0;  // %, population std of |e| over kept points
  double rrmse = 0.0;          // %, sqrt(mean e^2) over kept points
  double frac_gt_10 = 0.0;     // % of all points with |e| > 10%
  double frac_gt_25 = 0.0;
  std::size_t n_total = 0;      // points with nonzero truth
  std::size_t n_zero_truth = 0; // excluded before anything else
  std::size_t n_zero_pred = 0;  // kept for max and F, dropped for mean/std/rRMSE
  std::size_t n_trimmed = 0;    // largest |e| dropped for mean/std/rRMSE
  // Metrics computed on the trimmed set: mean, std and rRMSE only.
  static constexpr const char* trimmed_metrics = "mean,std,rrmse";
};

/// Number of smallest-|e| points kept by the nearest-rank rule:
/// ceil(q * n), at least 1 when n > 0.
std::size_t nearest_rank_keep(std::size_t n, double quantile);

/// quantile = 1 disables trimming.
EvalReport compute_report(std::span<const double> pred, std::span<const double> truth,
                          double trim_quantile = 0.995);

struct KdeSeries {
  std::vector<double> grid;    // %
  std::vector<double> density; // per %
  double bandwidth = 0.0;
};

struct KdeOptions {
  std::optional<std::pair<double, double>> window;
  double pad_bandwidths = 3.0; // grid spans data +- this many bandwidths
  std::size_t points = 512;
};

/// 0.9 min(s, IQR / 1.34) n^(-1/5) with the sample std s and a linearly
/// interpolated IQR. Throws ValidationError when s is zero or n < 2.
double silverman_bandwidth(std::span<const double> x);
KdeSeries kde(std::span<const double> errors, const KdeOptions& opts = {});

struct ParityRow {
  double truth, pred, rel_err_pct;
};
/// One row per point in input order; zero-truth points carry NaN error.
std::vector<ParityRow> parity_series(std::span<const double> pred, std::span<const double> truth);

std::string format_report_csv(const EvalReport& r);
/// Aligned text table, one row per named model.
std::string format_report_table(const std::vector<std::pair<std::string, EvalReport>>& rows);
std::string format_parity_csv(const std::vector<ParityRow>& rows);
std::string format_kde_csv(const KdeSeries& k);

} // namespace chfkit
