#include "chfkit/if97.hpp"

#include "chfkit/errors.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace chfkit::if97 {
namespace {

constexpr double R = kSpecificGasConstant;

// Region 4 saturation-line coefficients n1..n10.
constexpr std::array<double, 10> kN4 = {
    0.11670521452767e+04, -0.72421316703206e+06, -0.17073846940092e+02,
    0.12020824702470e+05, -0.32325550322333e+07, 0.14915108613530e+02,
    -0.48232657361591e+04, 0.40511340542057e+06, -0.23855557567849e+00,
    0.65017534844798e+03};

struct Term {
  int i;
  int j;
  double n;
};

constexpr std::array<Term, 34> kRegion1 = {{
    {0, -2, 0.14632971213167e+00},  {0, -1, -0.84548187169114e+00},
    {0, 0, -0.37563603672040e+01},  {0, 1, 0.33855169168385e+01},
    {0, 2, -0.95791963387872e+00},  {0, 3, 0.15772038513228e+00},
    {0, 4, -0.16616417199501e-01},  {0, 5, 0.81214629983568e-03},
    {1, -9, 0.28319080123804e-03},  {1, -7, -0.60706301565874e-03},
    {1, -1, -0.18990068218419e-01}, {1, 0, -0.32529748770505e-01},
    {1, 1, -0.21841717175414e-01},  {1, 3, -0.52838357969930e-04},
    {2, -3, -0.47184321073267e-03}, {2, 0, -0.30001780793026e-03},
    {2, 1, 0.47661393906987e-04},   {2, 3, -0.44141845330846e-05},
    {2, 17, -0.72694996297594e-15}, {3, -4, -0.31679644845054e-04},
    {3, 0, -0.28270797985312e-05},  {3, 6, -0.85205128120103e-09},
    {4, -5, -0.22425281908000e-05}, {4, -2, -0.65171222895601e-06},
    {4, 10, -0.14341729937924e-12}, {5, -8, -0.40516996860117e-06},
    {8, -11, -0.12734301741641e-08}, {8, -6, -0.17424871230634e-09},
    {21, -29, -0.68762131295531e-18}, {23, -31, 0.14478307828521e-19},
    {29, -38, 0.26335781662795e-22}, {30, -39, -0.11947622640071e-22},
    {31, -40, 0.18228094581404e-23}, {32, -41, -0.93537087292458e-25},
}};

// Region 2 ideal-gas part: (J0, n0).
constexpr std::array<std::pair<int, double>, 9> kRegion2Ideal = {{
    {0, -0.96927686500217e+01}, {1, 0.10086655968018e+02},
    {-5, -0.56087911283020e-02}, {-4, 0.71452738081455e-01},
    {-3, -0.40710498223928e+00}, {-2, 0.14240819171444e+01},
    {-1, -0.43839511319450e+01}, {2, -0.28408632460772e+00},
    {3, 0.21268463753307e-01},
}};

constexpr std::array<Term, 43> kRegion2Residual = {{
    {1, 0, -0.17731742473213e-02},  {1, 1, -0.17834862292358e-01},
    {1, 2, -0.45996013696365e-01},  {1, 3, -0.57581259083432e-01},
    {1, 6, -0.50325278727930e-01},  {2, 1, -0.33032641670203e-04},
    {2, 2, -0.18948987516315e-03},  {2, 4, -0.39392777243355e-02},
    {2, 7, -0.43797295650573e-01},  {2, 36, -0.26674547914087e-04},
    {3, 0, 0.20481737692309e-07},   {3, 1, 0.43870667284435e-06},
    {3, 3, -0.32277677238570e-04},  {3, 6, -0.15033924542148e-02},
    {3, 35, -0.40668253562649e-01}, {4, 1, -0.78847309559367e-09},
    {4, 2, 0.12790717852285e-07},   {4, 3, 0.48225372718507e-06},
    {5, 7, 0.22922076337661e-05},   {6, 3, -0.16714766451061e-10},
    {6, 16, -0.21171472321355e-02}, {6, 35, -0.23895741934104e+02},
    {7, 0, -0.59059564324270e-17},  {7, 11, -0.12621808899101e-05},
    {7, 25, -0.38946842435739e-01}, {8, 8, 0.11256211360459e-10},
    {8, 36, -0.82311340897998e+01}, {9, 13, 0.19809712802088e-07},
    {10, 4, 0.10406965210174e-18},  {10, 10, -0.10234747095929e-12},
    {10, 14, -0.10018179379511e-08}, {16, 29, -0.80882908646985e-10},
    {16, 50, 0.10693031879409e+00}, {18, 57, -0.33662250574171e+00},
    {20, 20, 0.89185845355421e-24}, {20, 35, 0.30629316876232e-12},
    {20, 48, -0.42002467698208e-05}, {21, 21, -0.59056029685639e-25},
    {22, 53, 0.37826947613457e-05}, {23, 39, -0.12768608934681e-14},
    {24, 26, 0.73087610595061e-28}, {24, 40, 0.55414715350778e-16},
    {24, 58, -0.94369707241210e-06},
}};

// Region 3: n1 multiplies ln(delta); the remaining 39 terms are polynomial.
constexpr double kRegion3LogCoeff = 0.10658070028513e+01;
constexpr std::array<Term, 39> kRegion3 = {{
    {0, 0, -0.15732845290239e+02},  {0, 1, 0.20944396974307e+02},
    {0, 2, -0.76867707878716e+01},  {0, 7, 0.26185947787954e+01},
    {0, 10, -0.28080781148620e+01}, {0, 12, 0.12053369696517e+01},
    {0, 23, -0.84566812812502e-02}, {1, 2, -0.12654315477714e+01},
    {1, 6, -0.11524407806681e+01},  {1, 15, 0.88521043984318e+00},
    {1, 17, -0.64207765181607e+00}, {2, 0, 0.38493460186671e+00},
    {2, 2, -0.85214708824206e+00},  {2, 6, 0.48972281541877e+01},
    {2, 7, -0.30502617256965e+01},  {2, 22, 0.39420536879154e-01},
    {2, 26, 0.12558408424308e+00},  {3, 0, -0.27999329698710e+00},
    {3, 2, 0.13899799569460e+01},   {3, 4, -0.20189915023570e+01},
    {3, 16, -0.82147637173963e-02}, {3, 26, -0.47596035734923e+00},
    {4, 0, 0.43984074473500e-01},   {4, 2, -0.44476435428739e+00},
    {4, 4, 0.90572070719733e+00},   {4, 26, 0.70522450087967e+00},
    {5, 1, 0.10770512626332e+00},   {5, 3, -0.32913623258954e+00},
    {5, 26, -0.50871062041158e+00}, {6, 0, -0.22175400873096e-01},
    {6, 2, 0.94260751665092e-01},   {6, 26, 0.16436278447961e+00},
    {7, 2, -0.13503372241348e-01},  {8, 26, -0.14834345352472e-01},
    {9, 2, 0.57922953628084e-03},   {9, 26, 0.32308904703711e-02},
    {10, 0, 0.80964802996215e-04},  {10, 1, -0.16557679795037e-03},
    {11, 26, -0.44923899061815e-04},
}};

double ipow(double x, int n) {
  return n == 0 ? 1.0 : std::pow(x, n);
}

[[noreturn]] void out_of_range(const char* what, double value, double lo,
                               double hi, const char* unit) {
  std::ostringstream os;
  os.precision(10);
  os << what << " " << value << " " << unit << " outside valid interval [" << lo
     << ", " << hi << "] " << unit;
  throw DomainError(os.str());
}

// Auxiliary saturated-density equations (IAPWS supplementary release,
// Wagner & Pruss 1993). Only used as starting points for root searches.
double aux_liquid_density(double t) {
  const double th = 1.0 - t / kCriticalTemperature;
  const double c = std::cbrt(th);
  return kCriticalDensity *
         (1.0 + 1.99274064 * c + 1.09965342 * c * c - 0.510839303 * std::pow(th, 5.0 / 3.0) -
          1.75493479 * std::pow(th, 16.0 / 3.0) - 45.5170352 * std::pow(th, 43.0 / 3.0) -
          6.74694450e5 * std::pow(th, 110.0 / 3.0));
}

double aux_vapor_density(double t) {
  const double th = 1.0 - t / kCriticalTemperature;
  return kCriticalDensity *
         std::exp(-2.03150240 * std::pow(th, 2.0 / 6.0) - 2.68302940 * std::pow(th, 4.0 / 6.0) -
                  5.38626492 * std::pow(th, 8.0 / 6.0) - 17.2991605 * std::pow(th, 18.0 / 6.0) -
                  44.7586581 * std::pow(th, 37.0 / 6.0) - 63.9201063 * std::pow(th, 71.0 / 6.0));
}

// Walks from `start` in steps until p3(rho, t) - p changes sign, then
// bisects. `rising` selects the branch: true finds the crossing where
// p3 - p goes from negative (below) to positive (above) with increasing
// density, which is the correct orientation for both the liquid root and
// the vapor root of the van der Waals-like loop.
double region3_density_root(double p, double t, double start, double step) {
  auto f = [&](double rho) { return region3_pressure(rho, t) - p; };
  double lo = start;
  double hi = start;
  double f0 = f(start);
  constexpr int kMaxSteps = 200000;
  int k = 0;
  if (f0 < 0.0) {
    while (f(hi) < 0.0) {
      lo = hi;
      hi += step;
      if (++k > kMaxSteps) throw DomainError("region-3 density search failed");
    }
  } else {
    while (f(lo) >= 0.0) {
      hi = lo;
      lo -= step;
      if (lo <= 0.0 || ++k > kMaxSteps) throw DomainError("region-3 density search failed");
    }
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace

double saturation_pressure(double temperature) {
  if (!(temperature >= kMinSaturationTemperature && temperature <= kCriticalTemperature)) {
    out_of_range("saturation temperature", temperature, kMinSaturationTemperature,
                 kCriticalTemperature, "K");
  }
  const auto& n = kN4;
  const double th = temperature + n[8] / (temperature - n[9]);
  const double a = th * th + n[0] * th + n[1];
  const double b = n[2] * th * th + n[3] * th + n[4];
  const double c = n[5] * th * th + n[6] * th + n[7];
  const double x = 2.0 * c / (-b + std::sqrt(b * b - 4.0 * a * c));
  return 1.0e6 * x * x * x * x;
}

double saturation_temperature(double pressure) {
  // The rounded interval ends differ from saturation_pressure() at the
  // endpoint temperatures in the 7th digit; accept that sliver.
  if (!(pressure >= kMinSaturationPressure * (1.0 - 1e-6) &&
        pressure <= kCriticalPressure * (1.0 + 1e-9))) {
    out_of_range("saturation pressure", pressure, kMinSaturationPressure, kCriticalPressure, "Pa");
  }
  const auto& n = kN4;
  const double beta = std::pow(pressure / 1.0e6, 0.25);
  const double e = beta * beta + n[2] * beta + n[5];
  const double f = n[0] * beta * beta + n[3] * beta + n[6];
  const double g = n[1] * beta * beta + n[4] * beta + n[7];
  const double d = 2.0 * g / (-f - std::sqrt(f * f - 4.0 * e * g));
  return 0.5 * (n[9] + d - std::sqrt((n[9] + d) * (n[9] + d) - 4.0 * (n[8] + n[9] * d)));
}

double region1_enthalpy(double pressure, double temperature) {
  const double pi = pressure / 16.53e6;
  const double tau = 1386.0 / temperature;
  double gamma_tau = 0.0;
  for (const auto& [i, j, n] : kRegion1) {
    gamma_tau += n * ipow(7.1 - pi, i) * j * ipow(tau - 1.222, j - 1);
  }
  return R * temperature * tau * gamma_tau;
}

double region2_enthalpy(double pressure, double temperature) {
  const double pi = pressure / 1.0e6;
  const double tau = 540.0 / temperature;
  double g0_tau = 0.0;
  for (const auto& [j, n] : kRegion2Ideal) {
    g0_tau += n * j * ipow(tau, j - 1);
  }
  double gr_tau = 0.0;
  for (const auto& [i, j, n] : kRegion2Residual) {
    gr_tau += n * ipow(pi, i) * j * ipow(tau - 0.5, j - 1);
  }
  return R * temperature * tau * (g0_tau + gr_tau);
}

double region3_pressure(double density, double temperature) {
  const double delta = density / kCriticalDensity;
  const double tau = kCriticalTemperature / temperature;
  double phi_delta = kRegion3LogCoeff / delta;
  for (const auto& [i, j, n] : kRegion3) {
    if (i != 0) phi_delta += n * i * ipow(delta, i - 1) * ipow(tau, j);
  }
  return density * R * temperature * delta * phi_delta;
}

double region3_enthalpy(double density, double temperature) {
  const double delta = density / kCriticalDensity;
  const double tau = kCriticalTemperature / temperature;
  double phi_delta = kRegion3LogCoeff / delta;
  double phi_tau = 0.0;
  for (const auto& [i, j, n] : kRegion3) {
    if (i != 0) phi_delta += n * i * ipow(delta, i - 1) * ipow(tau, j);
    if (j != 0) phi_tau += n * ipow(delta, i) * j * ipow(tau, j - 1);
  }
  return R * temperature * (tau * phi_tau + delta * phi_delta);
}

SaturatedDensities region3_saturated_densities(double pressure) {
  const double t = saturation_temperature(pressure);
  if (t < kRegion13Temperature) {
    throw DomainError("saturation state is outside region 3 below 623.15 K");
  }
  if (pressure >= kCriticalPressure) {
    return {kCriticalDensity, kCriticalDensity};
  }
  // The auxiliary densities sit within ~0.1% of the roots; a small step
  // keeps the walk from jumping over the narrow near-critical loop.
  const double liquid_guess = aux_liquid_density(t);
  const double vapor_guess = aux_vapor_density(t);
  const double step = std::max(1e-4, 1e-3 * (liquid_guess - vapor_guess));
  return {region3_density_root(pressure, t, liquid_guess, step),
          region3_density_root(pressure, t, vapor_guess, step)};
}

SaturationState saturation_state(double pressure) {
  const double t = saturation_temperature(pressure);
  SaturationState s{};
  s.pressure = pressure;
  s.temperature_sat = t;
  if (t <= kRegion13Temperature) {
    s.h_f = region1_enthalpy(pressure, t);
    s.h_g = region2_enthalpy(pressure, t);
  } else {
    const auto rho = region3_saturated_densities(pressure);
    s.h_f = region3_enthalpy(rho.liquid, t);
    s.h_g = region3_enthalpy(rho.vapor, t);
  }
  s.h_fg = s.h_g - s.h_f;
  return s;
}

double liquid_enthalpy(double pressure, double temperature) {
  const double t_sat = saturation_temperature(pressure);
  if (temperature < kMinSaturationTemperature) {
    out_of_range("liquid temperature", temperature, kMinSaturationTemperature, t_sat, "K");
  }
  if (temperature > t_sat * (1.0 + 1e-12)) {
    std::ostringstream os;
    os.precision(10);
    os << "superheated inlet: T = " << temperature << " K exceeds T_sat = " << t_sat
       << " K at p = " << pressure << " Pa";
    throw DomainError(os.str());
  }
  if (temperature <= kRegion13Temperature) {
    return region1_enthalpy(pressure, temperature);
  }
  // Compressed liquid in region 3: the density lies above the saturated
  // liquid density at this temperature.
  const double start = aux_liquid_density(temperature);
  const double rho = region3_density_root(pressure, temperature, start, 0.05);
  return region3_enthalpy(rho, temperature);
}

double subcooling_from_inlet_temp(double pressure, double inlet_temperature) {
  const double t_sat = saturation_temperature(pressure);
  if (inlet_temperature >= t_sat) {
    if (inlet_temperature > t_sat * (1.0 + 1e-12)) {
      liquid_enthalpy(pressure, inlet_temperature); // throws the superheat error
    }
    return 0.0;
  }
  return saturation_state(pressure).h_f - liquid_enthalpy(pressure, inlet_temperature);
}

double inlet_temp_from_subcooling(double pressure, double subcooling) {
  const auto sat = saturation_state(pressure);
  if (subcooling <= 0.0) return sat.temperature_sat;
  const double target = sat.h_f - subcooling;
  double lo = kMinSaturationTemperature;
  double hi = sat.temperature_sat;
  if (liquid_enthalpy(pressure, lo) > target) {
    std::ostringstream os;
    os << "inlet subcooling " << subcooling << " J/kg implies a temperature below "
       << kMinSaturationTemperature << " K";
    throw DomainError(os.str());
  }
  for (int it = 0; it < 100 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    (liquid_enthalpy(pressure, mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace chfkit::if97
