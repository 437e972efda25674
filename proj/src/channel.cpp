#include "chfkit/channel.hpp"

#include "chfkit/csv.hpp"
#include "chfkit/errors.hpp"
#include "chfkit/if97.hpp"

#include <cmath>
#include <sstream>

namespace chfkit {

void ChannelCase::validate() const {
  if (!(diameter > 0.0 && heated_length > 0.0 && pressure > 0.0 && mass_flux > 0.0)) {
    throw ValidationError("channel D, L, P and G must be positive");
  }
  if (!std::isfinite(inlet_subcooling)) throw ValidationError("inlet subcooling must be finite");
  if (!(wall_heat_flux >= 0.0) || !std::isfinite(wall_heat_flux)) {
    throw ValidationError("wall heat flux must be finite and >= 0");
  }
  if (n_axial < 2) throw ValidationError("n_axial must be at least 2");
}

NodeChf node_chf(const ChfPredictor& p, const HbmOptions& opts) {
  return [&p, opts](const PredictionInput& in) { return p.predict(in, opts).value; };
}

std::vector<double> node_heights(double length, int n) {
  std::vector<double> z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = (i + 0.5) * length / n;
  z.back() = length;
  return z;
}

AxialProfile solve_channel(const ChannelCase& c, const NodeChf& chf) {
  c.validate();
  const auto sat = if97::saturation_state(c.pressure);
  AxialProfile p;
  p.inlet_enthalpy = sat.h_f - c.inlet_subcooling;
  p.wall_heat_flux = c.wall_heat_flux;
  const double q = c.wall_heat_flux;
  for (double z : node_heights(c.heated_length, c.n_axial)) {
    AxialNode node{};
    node.height = z;
    node.enthalpy = p.inlet_enthalpy + 4.0 * q * z / (c.mass_flux * c.diameter);
    node.quality = (node.enthalpy - sat.h_f) / sat.h_fg;
    const PredictionInput in{{c.diameter, z, c.pressure, c.mass_flux, c.inlet_subcooling}, node.quality};
    double v = 0.0;
    try {
      v = chf(in);
      if (!(v > 0.0)) {
        node.clamped = true;
        node.note = "non-positive CHF " + csv::format(v);
        v = 0.0;
      }
    } catch (const std::exception& e) {
      node.clamped = true;
      node.note = e.what();
      v = 0.0;
    }
    node.chf_local = v;
    node.dnbr = q > 0.0 ? v / q : std::numeric_limits<double>::infinity();
    p.nodes.push_back(std::move(node));
  }
  for (std::size_t k = 1; k < p.nodes.size(); ++k) {
    if (p.nodes[k].dnbr < p.nodes[p.min_dnbr_node].dnbr) p.min_dnbr_node = k;
  }
  return p;
}

AxialProfile solve_channel(const ChannelCase& c, const ChfPredictor& p) {
  return solve_channel(c, node_chf(p));
}

double extract_chf(const AxialProfile& profile, std::size_t node) {
  if (node >= profile.nodes.size()) throw ValidationError("node index out of range");
  // dnbr * q equals chf_local only up to one rounding; the stored value is
  // the exact product being represented.
  return profile.nodes[node].chf_local;
}

CriticalPower find_critical_power(ChannelCase c, const NodeChf& chf, double q_lo, double q_hi,
                                  double tolerance, int max_iterations) {
  if (!(q_lo > 0.0 && q_hi > q_lo)) throw ValidationError("critical power bracket needs 0 < q_lo < q_hi");
  auto min_dnbr = [&](double q) {
    c.wall_heat_flux = q;
    return solve_channel(c, chf);
  };
  const double d_lo = min_dnbr(q_lo).min_dnbr();
  const double d_hi = min_dnbr(q_hi).min_dnbr();
  if (!(d_lo > 1.0 && d_hi < 1.0)) {
    std::ostringstream os;
    os << "invalid critical power bracket: min DNBR " << d_lo << " at " << q_lo << " W/m2 and " << d_hi
       << " at " << q_hi << " W/m2 (need > 1 and < 1)";
    throw InvalidBracket(os.str(), d_lo, d_hi);
  }
  double lo = q_lo, hi = q_hi;
  CriticalPower out{};
  for (int it = 1; it <= max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto prof = min_dnbr(mid);
    out = {mid, prof.min_dnbr_node, prof.min_dnbr(), it};
    if (std::abs(out.min_dnbr - 1.0) < tolerance) return out;
    (out.min_dnbr > 1.0 ? lo : hi) = mid;
  }
  std::ostringstream os;
  os << "critical power search did not converge in " << max_iterations << " iterations (min DNBR "
     << out.min_dnbr << ")";
  throw std::runtime_error(os.str());
}

namespace {

ChannelResult solve_one(const ChannelCase& c, const NodeChf& chf) {
  try {
    return {solve_channel(c, chf), {}};
  } catch (const std::exception& e) {
    return {{}, e.what()};
  }
}

} // namespace

std::vector<ChannelResult> solve_channels(const std::vector<ChannelCase>& cases, const NodeChf& chf) {
  std::vector<ChannelResult> out(cases.size());
  const auto n = static_cast<std::ptrdiff_t>(cases.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    out[static_cast<std::size_t>(k)] = solve_one(cases[static_cast<std::size_t>(k)], chf);
  }
  return out;
}

std::vector<ChannelResult> solve_channels_serial(const std::vector<ChannelCase>& cases, const NodeChf& chf) {
  std::vector<ChannelResult> out;
  for (const auto& c : cases) out.push_back(solve_one(c, chf));
  return out;
}

std::vector<ChannelCase> parse_channel_csv(std::string_view text) {
  const auto t = csv::parse(text);
  static constexpr std::string_view names[] = {"D_mm", "L_m", "P_kPa", "G_kg_m2s",
                                               "dh_sub_kJ_kg", "q_wall_kW_m2", "n_axial"};
  std::size_t col[7];
  for (int k = 0; k < 7; ++k) col[k] = csv::column(t, names[k]);
  std::vector<ChannelCase> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    double v[7];
    for (int k = 0; k < 7; ++k) {
      const auto& cell = t.rows[r].cells[col[k]];
      const std::string field = "row " + std::to_string(r + 1) + "." + std::string(names[k]);
      auto x = csv::number(cell, field);
      if (!x) {
        if (k == 6) {
          v[k] = 60;
          continue;
        }
        throw ParseError("missing value", cell.offset, field);
      }
      v[k] = *x;
    }
    ChannelCase c{v[0] / 1000.0, v[1], v[2] * 1000.0, v[3], v[4] * 1000.0, v[5] * 1000.0,
                  static_cast<int>(v[6])};
    out.push_back(c);
  }
  return out;
}

std::string format_profile(const AxialProfile& p) {
  std::string out = "node,z_m,h_J_kg,x_e,chf_kW_m2,dnbr,clamped\n";
  for (std::size_t k = 0; k < p.nodes.size(); ++k) {
    const auto& n = p.nodes[k];
    out += std::to_string(k) + ',' + csv::format(n.height) + ',' + csv::format(n.enthalpy) + ',' +
           csv::format(n.quality) + ',' + csv::format(n.chf_local / 1000.0) + ',' +
           (std::isinf(n.dnbr) ? std::string("inf") : csv::format(n.dnbr)) + ',' +
           (n.clamped ? "1" : "0") + '\n';
  }
  return out;
}

} // namespace chfkit
