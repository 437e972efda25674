#include "chfkit/hybrid.hpp"

#include "chfkit/errors.hpp"

namespace chfkit {

std::string_view to_string(PredictorKind k) {
  switch (k) {
  case PredictorKind::base_biasi: return "base_biasi";
  case PredictorKind::base_bowring: return "base_bowring";
  case PredictorKind::pure_ml: return "pure_ml";
  case PredictorKind::hybrid_biasi: return "hybrid_biasi";
  case PredictorKind::hybrid_bowring: return "hybrid_bowring";
  }
  return "?";
}

PredictorKind predictor_kind_from_string(std::string_view s) {
  for (auto k : {PredictorKind::base_biasi, PredictorKind::base_bowring, PredictorKind::pure_ml,
                 PredictorKind::hybrid_biasi, PredictorKind::hybrid_bowring}) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("unknown predictor kind '" + std::string(s) + "'");
}

std::string_view to_string(SolveMode m) { return m == SolveMode::dsm ? "dsm" : "hbm"; }

SolveMode solve_mode_from_string(std::string_view s) {
  if (s == "dsm") return SolveMode::dsm;
  if (s == "hbm") return SolveMode::hbm;
  throw ValidationError("unknown solve mode '" + std::string(s) + "'");
}

namespace {

ResidualDataset residuals(const std::vector<ChfRecord>& records, Correlation base, const HbmOptions& opts,
                          bool parallel) {
  const auto n = static_cast<std::ptrdiff_t>(records.size());
  std::vector<std::optional<double>> base_chf(records.size());
  std::vector<std::string> errors(records.size());
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    try {
      base_chf[i] = solve_hbm(base, records[i].inlet(), opts).chf;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  ResidualDataset out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!base_chf[i]) {
      out.failures.push_back({i, errors[i]});
      continue;
    }
    const auto& r = records[i];
    out.records.push_back({r.features(), *base_chf[i], r.measured_chf, r.measured_chf - *base_chf[i]});
  }
  return out;
}

} // namespace

ResidualDataset build_residual_dataset(const std::vector<ChfRecord>& records, Correlation base,
                                       const HbmOptions& opts) {
  return residuals(records, base, opts, true);
}

ResidualDataset build_residual_dataset_serial(const std::vector<ChfRecord>& records, Correlation base,
                                              const HbmOptions& opts) {
  return residuals(records, base, opts, false);
}

namespace {

std::optional<BaseModel> expected_base(PredictorKind k) {
  switch (k) {
  case PredictorKind::pure_ml: return BaseModel::none;
  case PredictorKind::hybrid_biasi: return BaseModel::biasi;
  case PredictorKind::hybrid_bowring: return BaseModel::bowring;
  default: return std::nullopt;
  }
}

} // namespace

ChfPredictor::ChfPredictor(PredictorKind kind, std::optional<Mlp> model, SolveMode mode)
    : kind_(kind), model_(std::move(model)), mode_(mode) {
  const auto base = expected_base(kind);
  if (!base) {
    if (model_) throw ValidationError(std::string(to_string(kind)) + " takes no model");
    return;
  }
  if (!model_) throw ValidationError(std::string(to_string(kind)) + " requires a model");
  model_->validate();
  if (model_->base_model != *base) {
    throw ValidationError("model base_model '" + std::string(to_string(model_->base_model)) +
                          "' does not match predictor kind " + std::string(to_string(kind)));
  }
}

std::optional<Correlation> ChfPredictor::base_correlation() const {
  switch (kind_) {
  case PredictorKind::base_biasi:
  case PredictorKind::hybrid_biasi: return Correlation::biasi;
  case PredictorKind::base_bowring:
  case PredictorKind::hybrid_bowring: return Correlation::bowring;
  case PredictorKind::pure_ml: return std::nullopt;
  }
  return std::nullopt;
}

double ChfPredictor::base_value(const PredictionInput& in, const HbmOptions& opts) const {
  const auto corr = base_correlation();
  if (!corr) throw ValidationError("pure_ml has no base correlation");
  if (mode_ == SolveMode::hbm) return solve_hbm(*corr, in.inlet, opts).chf;
  if (!in.local_quality) throw ValidationError("DSM prediction needs a local quality");
  const auto& c = in.inlet;
  return evaluate_dsm(*corr, {c.diameter, c.pressure, c.mass_flux, *in.local_quality}).chf;
}

Prediction ChfPredictor::predict(const PredictionInput& in, const HbmOptions& opts) const {
  const auto& c = in.inlet;
  const double x[5] = {c.diameter, c.heated_length, c.pressure, c.mass_flux, c.inlet_subcooling};
  Prediction p;
  if (kind_ == PredictorKind::pure_ml) {
    p.value = p.residual = forward(*model_, x);
    return p;
  }
  const auto corr = *base_correlation();
  p.base = base_value(in, opts);
  if (mode_ == SolveMode::hbm) {
    p.outside_validity = !within_validity(corr, c);
  } else {
    p.outside_validity = !within_validity(corr, LocalConditions{c.diameter, c.pressure, c.mass_flux, *in.local_quality});
  }
  if (model_) p.residual = forward(*model_, x);
  p.value = p.base + p.residual;
  return p;
}

} // namespace chfkit
