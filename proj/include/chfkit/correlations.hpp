#pragma once

// Biasi and Bowring critical-heat-flux correlations, evaluated either at a
// given local quality (direct substitution) or simultaneously with the
// channel heat balance (heat balance method).

#include <stdexcept>
#include <string>
#include <string_view>

namespace chfkit {

enum class Correlation { biasi, bowring };

std::string_view to_string(Correlation c);
Correlation correlation_from_string(std::string_view name);

struct LocalConditions {
  double diameter;  // m
  double pressure;  // Pa
  double mass_flux; // kg/(m^2 s)
  double quality;   // equilibrium quality
};

struct InletConditions {
  double diameter;         // m
  double heated_length;    // m, critical length from the inlet
  double pressure;         // Pa
  double mass_flux;        // kg/(m^2 s)
  double inlet_subcooling; // J/kg
};

/// Raw correlation output. Non-positive values are reported as-is and
/// flagged; clamping is the caller's policy.
struct CorrelationValue {
  double chf = 0.0; // W/m^2
  bool nonpositive = false;
  bool outside_validity = false;
};

CorrelationValue biasi_dsm(const LocalConditions& c);
CorrelationValue bowring_dsm(const LocalConditions& c);
CorrelationValue bowring_inlet(const InletConditions& c);
CorrelationValue evaluate_dsm(Correlation corr, const LocalConditions& c);

/// Published validity envelope check (metadata only, never a guard).
bool within_validity(Correlation corr, const LocalConditions& c);
bool within_validity(Correlation corr, const InletConditions& c);

/// Equilibrium quality at the end of the heated length for a uniform wall
/// heat flux: 4 q L / (G D h_fg) - dh_sub / h_fg.
double heat_balance_quality(const InletConditions& c, double heat_flux, double h_fg);

struct HbmOptions {
  double q_min = 1.0;     // W/m^2
  double q_max = 20.0e6;  // W/m^2
  double q_ceiling = 1.0e9; // W/m^2, q_max doubles up to this if needed
  double tolerance = 1.0; // W/m^2, on |q - corr(x(q))|
  // Also required unless the bracket can no longer be halved, so that the
  // returned flux round-trips through the DSM to ~1e-9 relative.
  double relative_tolerance = 1e-9;
  int max_iterations = 200;
};

struct HbmSolution {
  double chf = 0.0;              // W/m^2
  double critical_quality = 0.0; // heat-balance quality at chf
  int iterations = 0;
  double residual = 0.0; // chf - corr_dsm(critical_quality)
  bool quality_excursion = false; // some iterate left [-0.5, 1]
  bool outside_validity = false;
};

/// No heat flux in (q_min, q_max] puts the critical condition at the end of
/// the heated length. Carries the residual at both bracket ends.
class NoCriticalCondition : public std::runtime_error {
public:
  NoCriticalCondition(const std::string& what, double q_lo, double f_lo, double q_hi, double f_hi)
      : std::runtime_error(what), q_lo(q_lo), f_lo(f_lo), q_hi(q_hi), f_hi(f_hi) {}
  double q_lo, f_lo, q_hi, f_hi;
};

HbmSolution solve_hbm(Correlation corr, const InletConditions& c, const HbmOptions& opts = {});

} // namespace chfkit
