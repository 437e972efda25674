#include "chfkit/correlations.hpp"

#include "chfkit/errors.hpp"
#include "chfkit/if97.hpp"

#include <cmath>
#include <sstream>

namespace chfkit {
namespace {

constexpr double kQualityLow = -0.5;
constexpr double kQualityHigh = 1.0;

void check_finite_positive(double v, const char* name) {
  if (!std::isfinite(v) || v <= 0.0) {
    std::ostringstream os;
    os << name << " must be finite and positive, got " << v;
    throw DomainError(os.str());
  }
}

void check_local(const LocalConditions& c) {
  check_finite_positive(c.diameter, "diameter");
  check_finite_positive(c.mass_flux, "mass flux");
  check_finite_positive(c.pressure, "pressure");
  if (!std::isfinite(c.quality)) throw DomainError("quality must be finite");
}

void check_inlet(const InletConditions& c) {
  check_finite_positive(c.diameter, "diameter");
  check_finite_positive(c.heated_length, "heated length");
  check_finite_positive(c.mass_flux, "mass flux");
  check_finite_positive(c.pressure, "pressure");
  if (!std::isfinite(c.inlet_subcooling)) throw DomainError("inlet subcooling must be finite");
}

CorrelationValue make_value(double q, bool valid) {
  return {q, !(q > 0.0), !valid};
}

// Biasi (1967) in its native units: D [cm], G [g/(cm^2 s)], p [bar],
// q [W/cm^2]. Converted at the boundary so no rounded SI constants enter.
double biasi_value(double d, double p_pa, double g, double x) {
  const double d_cm = 100.0 * d;
  const double g_cgs = 0.1 * g;
  const double p = p_pa / 1.0e5;
  const double n = d >= 0.01 ? 0.4 : 0.6;
  const double dterm = std::pow(d_cm, -n);
  const double f = 0.7249 + 0.099 * p * std::exp(-0.032 * p);
  const double h = -1.159 + 0.149 * p * std::exp(-0.019 * p) + 8.99 * p / (10.0 + p * p);
  const double g16 = std::pow(g_cgs, -1.0 / 6.0);
  const double q_high = 3.78e3 * h * dterm * std::pow(g_cgs, -0.6) * (1.0 - x);
  if (g <= 300.0) return 1.0e4 * q_high;
  const double q_low = 1.883e3 * dterm * g16 * (f * g16 - x);
  return 1.0e4 * std::max(q_low, q_high);
}

struct BowringTerms {
  double a; // W/m
  double b; // D G / 4, kg/(m s)
  double c; // m
};

// Bowring (1972) in SI, reduced pressure p/6.895 MPa.
BowringTerms bowring_terms(double d, double p, double g, double h_fg) {
  const double pr = p / 6.895e6;
  double f1, f2, f3, f4;
  if (pr <= 1.0) {
    f1 = (std::pow(pr, 18.942) * std::exp(20.89 * (1.0 - pr)) + 0.917) / 1.917;
    f2 = f1 / ((std::pow(pr, 1.316) * std::exp(2.444 * (1.0 - pr)) + 0.309) / 1.309);
    f3 = (std::pow(pr, 17.023) * std::exp(16.658 * (1.0 - pr)) + 0.667) / 1.667;
    f4 = f3 * std::pow(pr, 1.649);
  } else {
    f1 = std::pow(pr, -0.368) * std::exp(0.648 * (1.0 - pr));
    f2 = f1 / (std::pow(pr, -0.448) * std::exp(0.245 * (1.0 - pr)));
    f3 = std::pow(pr, 0.219);
    f4 = f3 * std::pow(pr, 1.649);
  }
  const double n = 2.0 - 0.5 * pr;
  BowringTerms t{};
  t.b = 0.25 * d * g;
  t.a = 2.317 * h_fg * t.b * f1 / (1.0 + 0.0143 * f2 * std::sqrt(d) * g);
  t.c = 0.077 * f3 * d * g / (1.0 + 0.347 * f4 * std::pow(g / 1356.0, n));
  return t;
}

double bowring_local(double d, double p, double g, double x, double h_fg) {
  const auto t = bowring_terms(d, p, g, h_fg);
  if (!(t.c > 0.0)) throw DomainError("Bowring: degenerate geometry, nonpositive C");
  return (t.a - t.b * h_fg * x) / t.c;
}

double dsm_value(Correlation corr, double d, double p, double g, double x, double h_fg) {
  return corr == Correlation::biasi ? biasi_value(d, p, g, x) : bowring_local(d, p, g, x, h_fg);
}

} // namespace

std::string_view to_string(Correlation c) {
  return c == Correlation::biasi ? "biasi" : "bowring";
}

Correlation correlation_from_string(std::string_view name) {
  if (name == "biasi") return Correlation::biasi;
  if (name == "bowring") return Correlation::bowring;
  throw ValidationError("unknown correlation '" + std::string(name) + "'");
}

bool within_validity(Correlation corr, const LocalConditions& c) {
  if (corr == Correlation::biasi) {
    return c.diameter >= 0.003 && c.diameter <= 0.0375 && c.pressure >= 0.27e6 &&
           c.pressure <= 14.0e6 && c.mass_flux >= 100.0 && c.mass_flux <= 6000.0 &&
           c.quality < 1.0;
  }
  return c.diameter >= 0.002 && c.diameter <= 0.045 && c.pressure >= 0.2e6 &&
         c.pressure <= 19.0e6 && c.mass_flux >= 136.0 && c.mass_flux <= 18600.0;
}

bool within_validity(Correlation corr, const InletConditions& c) {
  const LocalConditions local{c.diameter, c.pressure, c.mass_flux, 0.0};
  if (!within_validity(corr, local)) return false;
  if (corr == Correlation::biasi) return c.heated_length >= 0.2 && c.heated_length <= 6.0;
  return c.heated_length >= 0.15 && c.heated_length <= 3.7;
}

CorrelationValue biasi_dsm(const LocalConditions& c) {
  check_local(c);
  return make_value(biasi_value(c.diameter, c.pressure, c.mass_flux, c.quality),
                    within_validity(Correlation::biasi, c));
}

CorrelationValue bowring_dsm(const LocalConditions& c) {
  check_local(c);
  const double h_fg = if97::saturation_state(c.pressure).h_fg;
  return make_value(bowring_local(c.diameter, c.pressure, c.mass_flux, c.quality, h_fg),
                    within_validity(Correlation::bowring, c));
}

CorrelationValue bowring_inlet(const InletConditions& c) {
  check_inlet(c);
  const double h_fg = if97::saturation_state(c.pressure).h_fg;
  const auto t = bowring_terms(c.diameter, c.pressure, c.mass_flux, h_fg);
  const double denom = t.c + c.heated_length;
  if (!(denom > 0.0)) throw DomainError("Bowring: degenerate geometry, nonpositive C + L");
  return make_value((t.a + t.b * c.inlet_subcooling) / denom,
                    within_validity(Correlation::bowring, c));
}

CorrelationValue evaluate_dsm(Correlation corr, const LocalConditions& c) {
  return corr == Correlation::biasi ? biasi_dsm(c) : bowring_dsm(c);
}

double heat_balance_quality(const InletConditions& c, double heat_flux, double h_fg) {
  return 4.0 * heat_flux * c.heated_length / (c.mass_flux * c.diameter * h_fg) -
         c.inlet_subcooling / h_fg;
}

HbmSolution solve_hbm(Correlation corr, const InletConditions& c, const HbmOptions& opts) {
  check_inlet(c);
  const double h_fg = if97::saturation_state(c.pressure).h_fg;
  HbmSolution sol{};
  sol.outside_validity = !within_validity(corr, c);

  auto residual = [&](double q, double& x) {
    x = heat_balance_quality(c, q, h_fg);
    if (x < kQualityLow || x > kQualityHigh) sol.quality_excursion = true;
    return q - dsm_value(corr, c.diameter, c.pressure, c.mass_flux, x, h_fg);
  };

  double x = 0.0;
  double lo = opts.q_min;
  double hi = opts.q_max;
  const double f_lo = residual(lo, x);
  double f_hi = residual(hi, x);
  // Short, strongly subcooled tubes can exceed the initial ceiling.
  while (f_lo < 0.0 && !(f_hi > 0.0) && hi < opts.q_ceiling) {
    lo = hi;
    hi = std::min(2.0 * hi, opts.q_ceiling);
    f_hi = residual(hi, x);
  }
  // residual(q) is strictly increasing: the correlation is nonincreasing in
  // quality and quality grows with q.
  if (!(f_lo < 0.0 && f_hi > 0.0)) {
    sol.quality_excursion = false;
    std::ostringstream os;
    os << "no critical condition for " << to_string(corr) << " in heat-flux bracket ["
       << opts.q_min << ", " << hi << "] W/m^2: residuals " << f_lo << ", " << f_hi;
    throw NoCriticalCondition(os.str(), opts.q_min, f_lo, hi, f_hi);
  }
  sol.quality_excursion = false;

  for (int it = 1; it <= opts.max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = residual(mid, x);
    sol.iterations = it;
    const bool stalled = mid <= lo || mid >= hi;
    if ((std::abs(f) < opts.tolerance && std::abs(f) <= opts.relative_tolerance * mid) ||
        (stalled && std::abs(f) < opts.tolerance)) {
      sol.chf = mid;
      sol.critical_quality = x;
      sol.residual = f;
      return sol;
    }
    if (stalled) break;
    (f < 0.0 ? lo : hi) = mid;
  }
  std::ostringstream os;
  os << "heat balance iteration did not converge for " << to_string(corr) << " in "
     << opts.max_iterations << " iterations, bracket [" << lo << ", " << hi << "]";
  throw NoCriticalCondition(os.str(), lo, residual(lo, x), hi, residual(hi, x));
}

} // namespace chfkit
