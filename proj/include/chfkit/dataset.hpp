#pragma once

// CHF experiment tables: CSV ingestion into SI units, envelope screening,
// seeded shuffling, z-score scaler fitting, and 80/10/10 partitioning.

#include "chfkit/correlations.hpp"
#include "chfkit/matrix.hpp"
#include "chfkit/mlp.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chfkit {

struct ChfRecord {
  double diameter;         // m
  double heated_length;    // m
  double pressure;         // Pa
  double mass_flux;        // kg/(m^2 s)
  double exit_quality;     // -
  double inlet_subcooling; // J/kg
  std::optional<double> inlet_temperature; // K
  double measured_chf;     // W/m^2

  InletConditions inlet() const {
    return {diameter, heated_length, pressure, mass_flux, inlet_subcooling};
  }
  /// D, L, P, G, dh_sub in the order of default_feature_names().
  std::vector<double> features() const {
    return {diameter, heated_length, pressure, mass_flux, inlet_subcooling};
  }
};

struct Range {
  double lo, hi;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Accepted parameter ranges in SI units. Defaults are the training ranges
/// of the tube CHF database.
struct Envelope {
  Range diameter{2.0e-3, 16.0e-3};
  Range heated_length{0.05, 20.0};
  Range pressure{100.0e3, 20000.0e3};
  Range mass_flux{8.0, 7964.0};
  Range exit_quality{-0.5, 0.99};
  Range inlet_subcooling{-1211.0e3, 1644.0e3};
  Range chf{50.0e3, 16339.0e3};

  /// Empty when the record is inside; otherwise the first violated field.
  std::optional<std::string> violation(const ChfRecord& r) const;
};

struct IngestOptions {
  bool strict = true; // reject out-of-envelope rows; otherwise keep and flag
  Envelope envelope;
};

struct RowIssue {
  std::size_t row; // 1-based data row (header excluded)
  std::string reason;
};

struct IngestResult {
  std::vector<ChfRecord> records;
  std::vector<RowIssue> rejected; // dropped rows
  std::vector<RowIssue> flagged;  // kept rows outside the envelope
  std::vector<std::size_t> source_rows; // data row of each kept record
};

inline constexpr std::string_view kChfCsvHeader =
    "D_mm,L_m,P_kPa,G_kg_m2s,x_e,dh_sub_kJ_kg,T_in_C,chf_kW_m2";

/// Parses CSV text. Throws ParseError for a missing column, an unparseable
/// number, or an empty file. Blank cells are missing values: T_in and
/// dh_sub are derived from each other, x_e from the heat balance.
IngestResult parse_chf_csv(std::string_view text, const IngestOptions& opts = {});
IngestResult ingest(const std::filesystem::path& path, const IngestOptions& opts = {});

std::string format_chf_csv(const std::vector<ChfRecord>& records);
void write_chf_csv(const std::vector<ChfRecord>& records, const std::filesystem::path& path);

/// Seeded uniform permutation.
std::vector<ChfRecord> shuffle_records(std::vector<ChfRecord> records, std::uint64_t seed);

struct ScalerFit {
  Scaler scaler;
  std::vector<std::string> warnings;
};

/// Population mean and standard deviation per column. A constant column
/// gets std 1 and a warning.
ScalerFit fit_scaler(const Matrix& x);
ScalerFit fit_scaler(const std::vector<ChfRecord>& records);

Matrix feature_matrix(const std::vector<ChfRecord>& records);

struct DatasetSplit {
  std::vector<ChfRecord> train, validation, test;
  std::uint64_t seed = 0;
};

/// Validation and test slices each get n/10 rounded to nearest; the
/// remainder goes to train (24,579 rows -> 19,663 / 2,458 / 2,458).
struct SplitSizes {
  std::size_t train, validation, test;
};
SplitSizes split_sizes(std::size_t n);

/// Shuffles with `seed` and cuts contiguous train/validation/test slices.
DatasetSplit split_dataset(const std::vector<ChfRecord>& records, std::uint64_t seed);

} // namespace chfkit
