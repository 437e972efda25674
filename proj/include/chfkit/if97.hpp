#pragma once

// Subset of IAPWS-IF97 for ordinary water: saturation line (Region 4),
// compressed liquid (Region 1), superheated vapor (Region 2), and the
// near-critical Region 3 needed for saturated states above 16.529 MPa.
// All quantities are strict SI: Pa, K, J/kg, kg/m^3.

namespace chfkit::if97 {

inline constexpr double kSpecificGasConstant = 461.526; // J/(kg K)
inline constexpr double kCriticalTemperature = 647.096;  // K
inline constexpr double kCriticalPressure = 22.064e6;    // Pa
inline constexpr double kCriticalDensity = 322.0;        // kg/m^3
inline constexpr double kMinSaturationTemperature = 273.15;
inline constexpr double kMinSaturationPressure = 611.213;
/// Upper temperature of Region 1 and lower corner of Region 3.
inline constexpr double kRegion13Temperature = 623.15;

struct SaturationState {
  double pressure;        // Pa
  double temperature_sat; // K
  double h_f;             // J/kg
  double h_g;             // J/kg
  double h_fg;            // J/kg, exactly h_g - h_f
};

double saturation_temperature(double pressure);
double saturation_pressure(double temperature);

/// Specific enthalpy from the Region-1 Gibbs equation.
double region1_enthalpy(double pressure, double temperature);
/// Specific enthalpy from the Region-2 Gibbs equation (ideal + residual).
double region2_enthalpy(double pressure, double temperature);
/// Pressure and enthalpy from the Region-3 Helmholtz equation.
double region3_pressure(double density, double temperature);
double region3_enthalpy(double density, double temperature);

/// Saturated liquid and vapor densities on the Region-3 part of the
/// saturation line (T_sat > 623.15 K).
struct SaturatedDensities {
  double liquid;
  double vapor;
};
SaturatedDensities region3_saturated_densities(double pressure);

SaturationState saturation_state(double pressure);

/// Enthalpy of subcooled or saturated liquid water at (p, T), T <= T_sat(p).
double liquid_enthalpy(double pressure, double temperature);

/// Inlet subcooling h_f(p) - h_liquid(p, t_in).
double subcooling_from_inlet_temp(double pressure, double inlet_temperature);

/// Inverse of subcooling_from_inlet_temp. A non-positive subcooling means a
/// saturated (or two-phase) inlet and maps to T_sat.
double inlet_temp_from_subcooling(double pressure, double subcooling);

} // namespace chfkit::if97
