#pragma once

// Base correlation + residual network composition: residual targets for
// training and corrected predictions at deployment.

#include "chfkit/correlations.hpp"
#include "chfkit/dataset.hpp"
#include "chfkit/mlp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace chfkit {

enum class PredictorKind { base_biasi, base_bowring, pure_ml, hybrid_biasi, hybrid_bowring };
enum class SolveMode { dsm, hbm };

std::string_view to_string(PredictorKind k);
PredictorKind predictor_kind_from_string(std::string_view s);
std::string_view to_string(SolveMode m);
SolveMode solve_mode_from_string(std::string_view s);

struct ResidualRecord {
  std::vector<double> features; // D, L, P, G, dh_sub (SI)
  double base_chf;
  double measured_chf;
  double residual; // measured_chf - base_chf
};

struct ResidualFailure {
  std::size_t index;
  std::string reason;
};

struct ResidualDataset {
  std::vector<ResidualRecord> records;
  std::vector<ResidualFailure> failures;
};

/// Base CHF for every record by the heat balance method. Records whose
/// solve fails are skipped and reported. Runs records in parallel; output
/// keeps input order.
ResidualDataset build_residual_dataset(const std::vector<ChfRecord>& records, Correlation base,
                                       const HbmOptions& opts = {});
ResidualDataset build_residual_dataset_serial(const std::vector<ChfRecord>& records, Correlation base,
                                              const HbmOptions& opts = {});

struct Prediction {
  double value = 0.0;
  double base = 0.0;     // 0 for pure_ml
  double residual = 0.0; // network output for hybrids; value for pure_ml
  bool outside_validity = false;
};

/// Inputs for a prediction. DSM needs the local quality at the critical
/// location; HBM ignores it.
struct PredictionInput {
  InletConditions inlet;
  std::optional<double> local_quality;
};

class ChfPredictor {
public:
  ChfPredictor(PredictorKind kind, std::optional<Mlp> model = std::nullopt,
               SolveMode mode = SolveMode::hbm);

  PredictorKind kind() const { return kind_; }
  SolveMode solve_mode() const { return mode_; }
  const std::optional<Mlp>& model() const { return model_; }
  std::optional<Correlation> base_correlation() const;

  /// Throws NoCriticalCondition (HBM) or ValidationError (DSM without a
  /// quality) for base and hybrid kinds; pure_ml never solves.
  Prediction predict(const PredictionInput& in, const HbmOptions& opts = {}) const;
  Prediction predict(const InletConditions& c, const HbmOptions& opts = {}) const {
    return predict(PredictionInput{c, std::nullopt}, opts);
  }

  /// Base CHF alone (HBM or DSM), bitwise equal to the correlation layer.
  double base_value(const PredictionInput& in, const HbmOptions& opts = {}) const;

private:
  PredictorKind kind_;
  std::optional<Mlp> model_;
  SolveMode mode_;
};

} // namespace chfkit
