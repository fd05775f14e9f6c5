#pragma once

// Domain types shared by every module: experiment parameters, ratchet states,
// recorded trajectories, the scaling map between binding rates, and the flat
// CSV formats.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ratchet {

enum class Engine { thinning, graphical };

enum class VariantKind { none, dissociation, drift, binding_measure };

/// Binding measure of the boundary jumps: Lebesgue (uniform on the gap),
/// an atom at the pore (the boundary jumps onto the current position), or a
/// finite mixture of the two.
enum class Binding { lebesgue, delta_at_pore, mixture };

struct VariantSpec {
  VariantKind kind = VariantKind::none;
  /// Per bound molecule, per unit time.
  double dissociation_rate = 0.0;
  double drift = 0.0;
  Binding binding = Binding::lebesgue;
  /// Rate of the atom at the pore (mixture only; delta_at_pore uses gamma).
  double atom_mass = 0.0;
  /// Dissociation model: bind on [R, X] instead of [0, X].
  bool bind_above_boundary = false;
};

struct RatchetParams {
  double gamma = 1.0;
  double t_max = 100.0;
  double dt = 1e-3;
  double x0 = 0.0;
  Engine engine = Engine::thinning;
  VariantSpec variant{};
  std::uint64_t seed = 0;
  std::uint64_t replicas = 1;
};

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }
  std::string summary() const {
    std::string out;
    for (const auto& v : violations) out += "error: " + v + "\n";
    for (const auto& w : warnings) out += "warning: " + w + "\n";
    return out;
  }
};

/// Coarsest step size that does not trigger the resolution warning; the
/// ratchet's natural time scale is gamma^{-2/3}.
inline double max_recommended_dt(double gamma) {
  return 0.01 * std::pow(gamma, -2.0 / 3.0);
}

inline ValidationReport validate(const RatchetParams& p) {
  ValidationReport report;
  auto require = [&](bool cond, const char* what) {
    if (!cond) report.violations.emplace_back(what);
  };
  require(std::isfinite(p.gamma) && p.gamma > 0.0, "gamma must be positive");
  require(std::isfinite(p.dt) && p.dt > 0.0, "dt must be positive");
  require(std::isfinite(p.t_max) && p.t_max > 0.0, "t_max must be positive");
  if (p.dt > 0.0 && p.t_max > 0.0) require(p.dt < p.t_max, "dt must be smaller than t_max");
  require(std::isfinite(p.x0) && p.x0 >= 0.0, "x0 must be non-negative");
  require(p.replicas >= 1, "replicas must be at least 1");
  const auto& v = p.variant;
  require(std::isfinite(v.dissociation_rate) && v.dissociation_rate >= 0.0,
          "dissociation_rate must be non-negative");
  require(std::isfinite(v.drift), "drift must be finite");
  require(std::isfinite(v.atom_mass) && v.atom_mass >= 0.0,
          "atom_mass must be non-negative");
  if (p.engine == Engine::graphical && v.kind != VariantKind::none)
    report.violations.emplace_back(
        "the graphical engine simulates the base ratchet only");
  if (report.ok() && p.dt > max_recommended_dt(p.gamma)) {
    std::ostringstream msg;
    msg << "dt=" << p.dt << " exceeds 0.01*gamma^(-2/3)="
        << max_recommended_dt(p.gamma)
        << "; expect visible discretisation bias";
    report.warnings.push_back(msg.str());
  }
  return report;
}

inline void require_valid(const RatchetParams& p) {
  const auto report = validate(p);
  if (!report.ok()) throw std::invalid_argument(report.summary());
}

struct RatchetState {
  double t = 0.0;
  double x = 0.0;
  double r = 0.0;
};

/// One boundary jump: at time tau the boundary moves from r_pre to r_post
/// while the position is x_pre.
struct JumpEvent {
  double tau = 0.0;
  double x_pre = 0.0;
  double r_pre = 0.0;
  double r_post = 0.0;
};

/// A time at which the path met the boundary during the preceding step,
/// reported with the boundary value in force at that moment.
struct BoundaryTouch {
  double t = 0.0;
  double r = 0.0;
};

struct Trajectory {
  RatchetParams params;
  std::vector<RatchetState> samples;
  std::vector<JumpEvent> jumps;
  /// Present for engine-produced paths; empty for paths read from CSV.
  std::vector<BoundaryTouch> touches;
};

// ---------------------------------------------------------------------------
// Scaling between binding rates
//
// A ratchet with rate gamma_from started at 0 maps in law onto one with rate
// gamma_to: with s = gamma_to / gamma_from, the state at new time t is
// s^{-1/3} (x, r) read at original time s^{2/3} t.

struct ScaleFactors {
  double time;    // new t = time * old t
  double length;  // new x = length * old x
};

inline ScaleFactors scale_factors(double gamma_from, double gamma_to) {
  if (!(gamma_from > 0.0) || !(gamma_to > 0.0))
    throw std::invalid_argument("rescale: rates must be positive");
  const double s = gamma_to / gamma_from;
  const double length = 1.0 / std::cbrt(s);
  return {length * length, length};
}

inline RatchetState rescale_state(const RatchetState& st, double gamma_from,
                                  double gamma_to) {
  const auto f = scale_factors(gamma_from, gamma_to);
  return {st.t * f.time, st.x * f.length, st.r * f.length};
}

inline Trajectory rescale_trajectory(const Trajectory& traj, double gamma_to) {
  if (traj.params.x0 != 0.0)
    throw std::invalid_argument(
        "rescale_trajectory: scaling holds for paths started at 0");
  const double gamma_from = traj.params.gamma;
  const auto f = scale_factors(gamma_from, gamma_to);
  Trajectory out;
  out.params = traj.params;
  out.params.gamma = gamma_to;
  out.params.dt *= f.time;
  out.params.t_max *= f.time;
  out.samples.reserve(traj.samples.size());
  for (const auto& s : traj.samples)
    out.samples.push_back({s.t * f.time, s.x * f.length, s.r * f.length});
  out.jumps.reserve(traj.jumps.size());
  for (const auto& j : traj.jumps)
    out.jumps.push_back({j.tau * f.time, j.x_pre * f.length,
                         j.r_pre * f.length, j.r_post * f.length});
  out.touches.reserve(traj.touches.size());
  for (const auto& t : traj.touches)
    out.touches.push_back({t.t * f.time, t.r * f.length});
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace csv {

namespace detail {

inline std::vector<double> parse_row(const std::string& line, std::size_t width,
                                     std::size_t line_no) {
  std::vector<double> cells;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    const std::string cell(rest.substr(0, comma));
    try {
      std::size_t used = 0;
      cells.push_back(std::stod(cell, &used));
      if (used != cell.size() && cell.find_first_not_of(" \t\r", used) != std::string::npos)
        throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw std::runtime_error("csv line " + std::to_string(line_no) +
                               ": bad number '" + cell + "'");
    }
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (cells.size() != width)
    throw std::runtime_error("csv line " + std::to_string(line_no) +
                             ": expected " + std::to_string(width) + " fields");
  return cells;
}

inline void expect_header(std::istream& in, std::string_view header) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header)
    throw std::runtime_error("csv: expected header '" + std::string(header) +
                             "', got '" + line + "'");
}

}  // namespace detail

inline constexpr std::string_view kTrajectoryHeader = "t,x,r";
inline constexpr std::string_view kJumpHeader = "n,tau,x_pre,r_pre,r_post";

inline void write_trajectory(std::ostream& out, const Trajectory& traj) {
  out << kTrajectoryHeader << '\n' << std::setprecision(17);
  for (const auto& s : traj.samples) out << s.t << ',' << s.x << ',' << s.r << '\n';
}

inline void write_jumps(std::ostream& out, const Trajectory& traj) {
  out << kJumpHeader << '\n' << std::setprecision(17);
  std::size_t n = 1;
  for (const auto& j : traj.jumps)
    out << n++ << ',' << j.tau << ',' << j.x_pre << ',' << j.r_pre << ','
        << j.r_post << '\n';
}

inline std::vector<RatchetState> read_trajectory(std::istream& in) {
  detail::expect_header(in, kTrajectoryHeader);
  std::vector<RatchetState> samples;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto c = detail::parse_row(line, 3, line_no);
    samples.push_back({c[0], c[1], c[2]});
  }
  return samples;
}

inline std::vector<JumpEvent> read_jumps(std::istream& in) {
  detail::expect_header(in, kJumpHeader);
  std::vector<JumpEvent> jumps;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto c = detail::parse_row(line, 5, line_no);
    jumps.push_back({c[1], c[2], c[3], c[4]});
  }
  return jumps;
}

}  // namespace csv

}  // namespace ratchet
