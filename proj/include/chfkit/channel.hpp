#pragma once

// Steady uniformly heated vertical tube: axial enthalpy and quality march,
// per-node CHF and DNBR from a predictor, and a critical-power search.

#include "chfkit/correlations.hpp"
#include "chfkit/hybrid.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace chfkit {

struct ChannelCase {
  double diameter;         // m
  double heated_length;    // m
  double pressure;         // Pa
  double mass_flux;        // kg/(m^2 s)
  double inlet_subcooling; // J/kg
  double wall_heat_flux;   // W/m^2
  int n_axial = 60;

  void validate() const;
};

struct AxialNode {
  double height;   // m
  double enthalpy; // J/kg
  double quality;
  double chf_local; // W/m^2, clamped at 0
  double dnbr;      // chf_local / wall flux; +inf when the flux is 0
  bool clamped = false; // predictor gave a non-positive value or failed
  std::string note;     // reason when clamped
};

struct AxialProfile {
  std::vector<AxialNode> nodes;
  double inlet_enthalpy = 0.0;
  double wall_heat_flux = 0.0;
  std::size_t min_dnbr_node = 0;
  double min_dnbr() const { return nodes[min_dnbr_node].dnbr; }
};

/// CHF at a node: inlet conditions with heated_length = node height plus
/// the local quality there.
using NodeChf = std::function<double(const PredictionInput&)>;

NodeChf node_chf(const ChfPredictor& p, const HbmOptions& opts = {});

/// Node i sits at (i + 1/2) L / n except the last, which sits at L.
std::vector<double> node_heights(double length, int n);

AxialProfile solve_channel(const ChannelCase& c, const NodeChf& chf);
AxialProfile solve_channel(const ChannelCase& c, const ChfPredictor& p);

/// dnbr x wall flux at one node.
double extract_chf(const AxialProfile& profile, std::size_t node);

struct CriticalPower {
  double wall_heat_flux; // W/m^2
  std::size_t limiting_node;
  double min_dnbr;
  int iterations;
};

class InvalidBracket : public std::runtime_error {
public:
  InvalidBracket(const std::string& what, double dnbr_lo, double dnbr_hi)
      : std::runtime_error(what), dnbr_lo(dnbr_lo), dnbr_hi(dnbr_hi) {}
  double dnbr_lo, dnbr_hi;
};

/// Bisection on the wall flux until |min DNBR - 1| < tolerance. The
/// case's own wall flux is ignored. Requires min DNBR(q_lo) > 1 >
/// min DNBR(q_hi).
CriticalPower find_critical_power(ChannelCase c, const NodeChf& chf, double q_lo, double q_hi,
                                  double tolerance = 1e-6, int max_iterations = 100);

/// Parallel over cases with one shared predictor; results keep case order.
/// A case that throws yields an empty profile and its message.
struct ChannelResult {
  AxialProfile profile;
  std::string error;
};
std::vector<ChannelResult> solve_channels(const std::vector<ChannelCase>& cases, const NodeChf& chf);
std::vector<ChannelResult> solve_channels_serial(const std::vector<ChannelCase>& cases, const NodeChf& chf);

inline constexpr std::string_view kChannelCsvHeader =
    "D_mm,L_m,P_kPa,G_kg_m2s,dh_sub_kJ_kg,q_wall_kW_m2,n_axial";

std::vector<ChannelCase> parse_channel_csv(std::string_view text);
/// CSV "node,z_m,h_J_kg,x_e,chf_kW_m2,dnbr,clamped".
std::string format_profile(const AxialProfile& p);

} // namespace chfkit
