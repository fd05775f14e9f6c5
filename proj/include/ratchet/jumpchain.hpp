#pragma once

// The Markov chain (Y_n, W_n, eta_n) observed at boundary jumps, in the
// gamma = 1/2 units of the analytic layer: Y is the gap X - R just after a
// jump, W the boundary increment and eta the waiting time.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "ratchet/engine.hpp"
#include "ratchet/random.hpp"
#include "ratchet/special.hpp"

namespace ratchet {

struct JumpRecord {
  double y = 0.0;
  double w = 0.0;
  /// E[eta_n | Y_{n-1}].
  double eta_expected = 0.0;
  /// Present only for records harvested from a path engine.
  std::optional<double> eta_sampled;
};

/// Law of the killing position of reflected Brownian motion started at x and
/// killed at rate y/2: density y G(x, y), CDF and survival in closed form.
class KillingLaw {
 public:
  struct Eval {
    double cdf;
    double survival;
    double density;
  };

  explicit KillingLaw(double x) : x_(x), sx_(special::airy_scaled(x)) {}

  double start() const { return x_; }

  Eval at(double y) const {
    constexpr double pi = std::numbers::pi;
    constexpr double sqrt3 = std::numbers::sqrt3;
    const special::ScaledAiry sy = special::airy_scaled(y);
    if (y >= x_) {
      const double psi_x = sx_.bi * std::exp(sx_.zeta - sy.zeta) +
                           sqrt3 * sx_.ai * std::exp(-sx_.zeta - sy.zeta);
      const double survival = -pi * psi_x * sy.ai_prime;
      return {1.0 - survival, survival, y * pi * psi_x * sy.ai};
    }
    const double grow = std::exp(sy.zeta - sx_.zeta);
    const double shrink = std::exp(-sy.zeta - sx_.zeta);
    const double dpsi_y = sy.bi_prime * grow + sqrt3 * sy.ai_prime * shrink;
    const double psi_y = sy.bi * grow + sqrt3 * sy.ai * shrink;
    const double cdf = pi * sx_.ai * dpsi_y;
    return {cdf, 1.0 - cdf, y * pi * sx_.ai * psi_y};
  }

  /// Inverts the CDF at u by bracketed Newton; upper quantiles are solved on
  /// the survival function to keep relative accuracy in the tail.
  double quantile(double u) const {
    if (!(u > 0.0 && u < 1.0))
      throw std::domain_error("KillingLaw::quantile: u must lie in (0, 1)");
    const bool upper = u > 0.5;
    const double target = upper ? 1.0 - u : u;
    auto residual = [&](const Eval& e) {
      return upper ? target - e.survival : e.cdf - target;
    };
    double lo = 0.0;
    double hi = x_ + 2.0;
    while (residual(at(hi)) < 0.0) {
      lo = hi;
      hi = x_ + 2.0 * (hi - x_);
    }
    double y = std::clamp(special::expected_jump_position(x_), lo, hi);
    for (int it = 0; it < 100; ++it) {
      const Eval e = at(y);
      const double f = residual(e);
      if (f == 0.0) return y;
      if (f < 0.0)
        lo = y;
      else
        hi = y;
      double next = e.density > 0.0 ? y - f / e.density : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::fabs(next - y) <= 1e-14 * (1.0 + y) || hi - lo <= 1e-14 * (1.0 + hi))
        return next;
      y = next;
    }
    return y;
  }

 private:
  double x_;
  special::ScaledAiry sx_;
};

/// A draw of the killing position started at x.
inline double sample_killing_position(double x, RandomStream& rng) {
  if (!std::isfinite(x) || x < 0.0)
    throw std::domain_error("sample_killing_position: x must be finite and >= 0");
  return KillingLaw(x).quantile(rng.uniform());
}

/// One exact chain transition from gap y.
inline JumpRecord chain_step(double y, RandomStream& rng) {
  const double killed = sample_killing_position(y, rng);
  const double y_next = killed * rng.uniform();
  return {y_next, killed - y_next, special::expected_jump_time(y), std::nullopt};
}

inline std::vector<JumpRecord> run_chain(std::uint64_t n, double y0,
                                         RandomStream& rng) {
  if (n == 0) throw std::invalid_argument("run_chain: n must be positive");
  std::vector<JumpRecord> out;
  out.reserve(n);
  double y = y0;
  for (std::uint64_t i = 0; i < n; ++i) {
    out.push_back(chain_step(y, rng));
    y = out.back().y;
  }
  return out;
}

/// Rate of the exponential envelope of 3 Ai: -Ai'(0) / Ai(0).
inline double invariant_envelope_rate() {
  const auto& o = special::airy_origin();
  return -o.ai_prime / o.ai;
}

/// Exact draw from the density 3 Ai on [0, inf): Ai is log-concave, so
/// Ai(z) <= Ai(0) exp(-lambda z) with the tangent slope lambda at 0.
/// Counts proposals in `proposals` when given.
inline double sample_invariant(RandomStream& rng, std::uint64_t* proposals = nullptr) {
  const double lambda = invariant_envelope_rate();
  const double ai0 = special::airy_origin().ai;
  for (;;) {
    if (proposals) ++*proposals;
    const double z = rng.exponential() / lambda;
    if (rng.uniform() * ai0 * std::exp(-lambda * z) <= special::airy_ai(z)) return z;
  }
}

// ---------------------------------------------------------------------------
// Records from path engines

/// Builds the jump chain from an engine's jump events, in the units of the
/// simulated gamma.
class JumpHarvester {
 public:
  JumpHarvester(double gamma, double x0) : units_(gamma), prev_y_(x0) {}

  void on_jump(const JumpEvent& j) {
    JumpRecord rec;
    rec.y = j.x_pre - j.r_post;
    rec.w = j.r_post - j.r_pre;
    rec.eta_expected = units_.expected_jump_time(prev_y_);
    rec.eta_sampled = j.tau - prev_tau_;
    records_.push_back(rec);
    prev_y_ = rec.y;
    prev_tau_ = j.tau;
  }

  const std::vector<JumpRecord>& records() const { return records_; }
  std::vector<JumpRecord> release() { return std::move(records_); }

 private:
  special::GammaUnits units_;
  double prev_y_;
  double prev_tau_ = 0.0;
  std::vector<JumpRecord> records_;
};

// ---------------------------------------------------------------------------
// Coupling

struct CouplingParams {
  double gamma = 0.5;
  double x = 0.0;
  double s1 = 0.0;
  double s2 = 1.0;
  double t_max = 1e4;
  double dt = 1e-3;
};

struct CouplingResult {
  std::optional<double> time;
  /// Attempts started when the driving path met a boundary point, each
  /// resolved at that point's next jump.
  std::uint64_t attempts = 0;
  std::uint64_t failed_attempts = 0;
};

/// Two boundary points driven by one Brownian path and one Poisson field;
/// they coincide from the first field point both accept.
inline CouplingResult coupling_experiment(const CouplingParams& cp,
                                          RandomStream& brownian,
                                          RandomStream& field,
                                          RandomStream& touches) {
  if (!(cp.gamma > 0.0) || !(cp.dt > 0.0) || !(cp.t_max > cp.dt) ||
      !std::isfinite(cp.x) || !std::isfinite(cp.s1) || !std::isfinite(cp.s2))
    throw std::invalid_argument("coupling_experiment: invalid parameters");
  CouplingResult res;
  if (cp.s1 == cp.s2) {
    res.time = 0.0;
    return res;
  }
  std::array<double, 2> s{cp.s1, cp.s2};
  int pending = -1;
  for (int i = 0; i < 2; ++i)
    if (pending < 0 && cp.x == s[i]) pending = i;

  auto check_hits = [&](double b_from, double b_to, double h) {
    if (pending >= 0 || h <= 0.0) return;
    for (int i = 0; i < 2; ++i)
      if (detail::bridge_touches(b_from - s[i], b_to - s[i], h, touches)) {
        pending = i;
        return;
      }
  };
  auto between = [](double v, double a, double c) {
    return v >= std::min(a, c) && v <= std::max(a, c);
  };

  const auto steps = static_cast<std::uint64_t>(std::floor(cp.t_max / cp.dt));
  const double sqrt_dt = std::sqrt(cp.dt);
  JumpClock clock(field);
  double b = cp.x;
  struct Point {
    double u_time, u_space;
  };
  std::array<Point, 16> points{};
  for (std::uint64_t k = 1; k <= steps; ++k) {
    const double t0 = static_cast<double>(k - 1) * cp.dt;
    const double b1 = b + sqrt_dt * brownian.normal();
    const double lo = std::min({b, b1, s[0], s[1]});
    const double hi = std::max({b, b1, s[0], s[1]});
    const double height = hi - lo;
    const auto n = std::min<std::uint64_t>(clock.count(cp.gamma * cp.dt * height),
                                           points.size());
    for (std::uint64_t j = 0; j < n; ++j) points[j] = {field.uniform(), field.uniform()};
    std::sort(points.begin(), points.begin() + static_cast<std::ptrdiff_t>(n),
              [](const Point& a, const Point& c) { return a.u_time < c.u_time; });
    double seg_u = 0.0, seg_b = b;
    for (std::uint64_t j = 0; j < n; ++j) {
      const double u = points[j].u_time;
      const double bp = b + (b1 - b) * u;
      const double sp = lo + points[j].u_space * height;
      const bool in0 = between(sp, s[0], bp);
      const bool in1 = between(sp, s[1], bp);
      if (!in0 && !in1) continue;
      check_hits(seg_b, bp, (u - seg_u) * cp.dt);
      seg_u = u;
      seg_b = bp;
      if (in0 && in1) {
        ++res.attempts;
        res.time = t0 + u * cp.dt;
        return res;
      }
      const int moved = in0 ? 0 : 1;
      s[moved] = sp;
      if (pending == moved) {
        ++res.attempts;
        ++res.failed_attempts;
        pending = -1;
      }
    }
    check_hits(seg_b, b1, (1.0 - seg_u) * cp.dt);
    b = b1;
  }
  return res;
}

// ---------------------------------------------------------------------------
// CSV

inline void write_chain_csv(std::ostream& out, const std::vector<JumpRecord>& recs) {
  const bool sampled =
      !recs.empty() && std::all_of(recs.begin(), recs.end(),
                                   [](const JumpRecord& r) { return r.eta_sampled.has_value(); });
  out << "n,y,w,eta_expected" << (sampled ? ",eta_sampled" : "") << '\n';
  out << std::setprecision(17);
  std::size_t n = 1;
  for (const auto& r : recs) {
    out << n++ << ',' << r.y << ',' << r.w << ',' << r.eta_expected;
    if (sampled) out << ',' << *r.eta_sampled;
    out << '\n';
  }
}

}  // namespace ratchet
