#include "chfkit/dataset.hpp"

#include "chfkit/csv.hpp"
#include "chfkit/errors.hpp"
#include "chfkit/if97.hpp"
#include "chfkit/rng.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace chfkit {

namespace {

std::string out_of_range(std::string_view name, double v, const Range& r) {
  std::ostringstream os;
  os << name << " = " << v << " outside [" << r.lo << ", " << r.hi << "]";
  return os.str();
}

constexpr double kKelvinOffset = 273.15;

} // namespace

std::optional<std::string> Envelope::violation(const ChfRecord& r) const {
  if (!diameter.contains(r.diameter)) return out_of_range("D [m]", r.diameter, diameter);
  if (!heated_length.contains(r.heated_length)) return out_of_range("L [m]", r.heated_length, heated_length);
  if (!pressure.contains(r.pressure)) return out_of_range("P [Pa]", r.pressure, pressure);
  if (!mass_flux.contains(r.mass_flux)) return out_of_range("G [kg/m2s]", r.mass_flux, mass_flux);
  if (!exit_quality.contains(r.exit_quality)) return out_of_range("x_e", r.exit_quality, exit_quality);
  if (!inlet_subcooling.contains(r.inlet_subcooling)) {
    return out_of_range("dh_sub [J/kg]", r.inlet_subcooling, inlet_subcooling);
  }
  if (!chf.contains(r.measured_chf)) return out_of_range("chf [W/m2]", r.measured_chf, chf);
  return std::nullopt;
}

IngestResult parse_chf_csv(std::string_view text, const IngestOptions& opts) {
  const auto table = csv::parse(text);
  static constexpr std::string_view names[] = {"D_mm", "L_m", "P_kPa", "G_kg_m2s",
                                               "x_e", "dh_sub_kJ_kg", "T_in_C", "chf_kW_m2"};
  std::size_t col[8];
  for (int k = 0; k < 8; ++k) col[k] = csv::column(table, names[k]);

  IngestResult out;
  for (std::size_t n = 0; n < table.rows.size(); ++n) {
    const auto& row = table.rows[n];
    const std::size_t data_row = n + 1;
    std::optional<double> v[8];
    for (int k = 0; k < 8; ++k) {
      v[k] = csv::number(row.cells[col[k]], "row " + std::to_string(data_row) + "." + std::string(names[k]));
    }
    auto reject = [&](std::string why) { out.rejected.push_back({data_row, std::move(why)}); };

    std::string missing;
    for (int k : {0, 1, 2, 3, 7}) {
      if (!v[k]) missing += (missing.empty() ? "" : ", ") + std::string(names[k]);
    }
    if (!missing.empty()) {
      reject("missing " + missing);
      continue;
    }
    if (!v[5] && !v[6]) {
      reject("missing both dh_sub_kJ_kg and T_in_C");
      continue;
    }
    ChfRecord r{};
    r.diameter = *v[0] / 1000.0;
    r.heated_length = *v[1];
    r.pressure = *v[2] * 1000.0;
    r.mass_flux = *v[3];
    r.measured_chf = *v[7] * 1000.0;
    if (!(r.diameter > 0.0 && r.heated_length > 0.0 && r.pressure > 0.0 && r.mass_flux > 0.0)) {
      reject("D, L, P and G must be positive");
      continue;
    }
    try {
      if (v[5]) {
        r.inlet_subcooling = *v[5] * 1000.0;
      } else {
        r.inlet_subcooling = if97::subcooling_from_inlet_temp(r.pressure, *v[6] + kKelvinOffset);
      }
      r.inlet_temperature = v[6] ? std::optional(*v[6] + kKelvinOffset)
                                 : std::optional(if97::inlet_temp_from_subcooling(r.pressure, r.inlet_subcooling));
      if (v[4]) {
        r.exit_quality = *v[4];
      } else {
        const double h_fg = if97::saturation_state(r.pressure).h_fg;
        r.exit_quality = heat_balance_quality(r.inlet(), r.measured_chf, h_fg);
      }
    } catch (const DomainError& e) {
      reject(e.what());
      continue;
    }
    if (auto why = opts.envelope.violation(r)) {
      if (opts.strict) {
        reject(*why);
        continue;
      }
      out.flagged.push_back({data_row, *why});
    }
    out.records.push_back(r);
    out.source_rows.push_back(data_row);
  }
  return out;
}

IngestResult ingest(const std::filesystem::path& path, const IngestOptions& opts) {
  return parse_chf_csv(csv::read_file(path.string()), opts);
}

std::string format_chf_csv(const std::vector<ChfRecord>& records) {
  std::string out(kChfCsvHeader);
  out += '\n';
  for (const auto& r : records) {
    out += csv::format(r.diameter * 1000.0) + ',' + csv::format(r.heated_length) + ',' +
           csv::format(r.pressure / 1000.0) + ',' + csv::format(r.mass_flux) + ',' +
           csv::format(r.exit_quality) + ',' + csv::format(r.inlet_subcooling / 1000.0) + ',' +
           (r.inlet_temperature ? csv::format(*r.inlet_temperature - kKelvinOffset) : std::string()) +
           ',' + csv::format(r.measured_chf / 1000.0) + '\n';
  }
  return out;
}

void write_chf_csv(const std::vector<ChfRecord>& records, const std::filesystem::path& path) {
  csv::write_file(path.string(), format_chf_csv(records));
}

std::vector<ChfRecord> shuffle_records(std::vector<ChfRecord> records, std::uint64_t seed) {
  Rng rng(seed);
  rng.shuffle(std::span<ChfRecord>(records));
  return records;
}

ScalerFit fit_scaler(const Matrix& x) {
  if (x.rows() < 2) throw ValidationError("fitting a scaler needs at least 2 rows");
  ScalerFit fit;
  const auto n = static_cast<double>(x.rows());
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) mean += x(r, c);
    mean /= n;
    double ss = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) ss += (x(r, c) - mean) * (x(r, c) - mean);
    double sd = std::sqrt(ss / n);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      fit.warnings.push_back("feature " + std::to_string(c) + " is constant; std set to 1");
      sd = 1.0;
    }
    fit.scaler.mean.push_back(mean);
    fit.scaler.std.push_back(sd);
  }
  return fit;
}

Matrix feature_matrix(const std::vector<ChfRecord>& records) {
  Matrix x;
  for (const auto& r : records) x.append_row(r.features());
  return x;
}

ScalerFit fit_scaler(const std::vector<ChfRecord>& records) { return fit_scaler(feature_matrix(records)); }

SplitSizes split_sizes(std::size_t n) {
  const auto tenth = static_cast<std::size_t>(std::llround(static_cast<double>(n) / 10.0));
  return {n - 2 * tenth, tenth, tenth};
}

DatasetSplit split_dataset(const std::vector<ChfRecord>& records, std::uint64_t seed) {
  if (records.size() < 10) throw ValidationError("splitting needs at least 10 records");
  const auto shuffled = shuffle_records(records, seed);
  const auto sz = split_sizes(records.size());
  DatasetSplit s;
  s.seed = seed;
  auto a = shuffled.begin();
  s.train.assign(a, a + static_cast<std::ptrdiff_t>(sz.train));
  a += static_cast<std::ptrdiff_t>(sz.train);
  s.validation.assign(a, a + static_cast<std::ptrdiff_t>(sz.validation));
  a += static_cast<std::ptrdiff_t>(sz.validation);
  s.test.assign(a, shuffled.end());
  return s;
}

} // namespace chfkit
