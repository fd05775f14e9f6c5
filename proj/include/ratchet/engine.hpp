#pragma once

// Path simulators for the gamma-Brownian ratchet.
//
// Both engines report through an observer with any subset of
//   on_sample(const RatchetState&, bool on_grid)
//   on_jump(const JumpEvent&)
//   on_touch(const BoundaryTouch&)
//   on_poisson_point(const GraphicalEvent&)   (graphical engine only)
//   on_driver(double t, double b, double s)   (graphical engine only)
// Events at one time arrive as touch, jump, sample.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "ratchet/core.hpp"
#include "ratchet/random.hpp"

namespace ratchet {

/// Jump clock in integrated-hazard time: fires when the accumulated hazard
/// passes an Exp(1) threshold. Over one step of hazard h it fires with
/// probability 1 - exp(-h), independently of earlier steps.
class JumpClock {
 public:
  explicit JumpClock(RandomStream& stream)
      : stream_(&stream), remaining_(stream.exponential()) {}

  bool fires(double hazard) {
    remaining_ -= hazard;
    if (remaining_ > 0.0) return false;
    remaining_ = stream_->exponential();
    return true;
  }

  /// Number of Poisson events in an interval of integrated hazard h.
  std::uint64_t count(double hazard) {
    std::uint64_t n = 0;
    while (remaining_ <= hazard) {
      hazard -= remaining_;
      remaining_ = stream_->exponential();
      ++n;
    }
    remaining_ -= hazard;
    return n;
  }

 private:
  RandomStream* stream_;
  double remaining_;
};

/// Jump-rate model of one thinning step: Lebesgue binding at rate
/// lebesgue_rate per unit gap, plus an atom at the pore at constant rate.
struct StepModel {
  double lebesgue_rate = 1.0;
  double atom_rate = 0.0;
  double drift = 0.0;
};

inline StepModel step_model(const RatchetParams& p) {
  const auto& v = p.variant;
  switch (v.kind) {
    case VariantKind::none:
      return {p.gamma, 0.0, 0.0};
    case VariantKind::drift:
      return {p.gamma, 0.0, v.drift};
    case VariantKind::binding_measure:
      switch (v.binding) {
        case Binding::lebesgue:
          return {p.gamma, 0.0, 0.0};
        case Binding::delta_at_pore:
          return {0.0, p.gamma, 0.0};
        case Binding::mixture:
          return {p.gamma, v.atom_mass, 0.0};
      }
      break;
    case VariantKind::dissociation:
      break;
  }
  throw std::invalid_argument(
      "step_model: the dissociation variant needs simulate_variant");
}

struct StepResult {
  RatchetState state;
  bool touched = false;
  bool jumped = false;
  JumpEvent jump{};
};

/// A space-time Poisson point used by the graphical construction.
struct GraphicalEvent {
  double tau_tilde = 0.0;
  double s = 0.0;
  /// Driving path value at tau_tilde.
  double b = 0.0;
};

namespace detail {

template <class O>
void emit_sample(O& o, const RatchetState& s, bool on_grid) {
  if constexpr (requires { o.on_sample(s, on_grid); }) o.on_sample(s, on_grid);
}
template <class O>
void emit_jump(O& o, const JumpEvent& j) {
  if constexpr (requires { o.on_jump(j); }) o.on_jump(j);
}
template <class O>
void emit_touch(O& o, const BoundaryTouch& t) {
  if constexpr (requires { o.on_touch(t); }) o.on_touch(t);
}
template <class O>
void emit_point(O& o, const GraphicalEvent& e) {
  if constexpr (requires { o.on_poisson_point(e); }) o.on_poisson_point(e);
}
template <class O>
void emit_driver(O& o, double t, double b, double s) {
  if constexpr (requires { o.on_driver(t, b, s); }) o.on_driver(t, b, s);
}
template <class O>
void emit_bound_count(O& o, double t, std::size_t n) {
  if constexpr (requires { o.on_bound_count(t, n); }) o.on_bound_count(t, n);
}

/// Whether a Brownian bridge over duration h from a to b (same sign, measured
/// from the boundary) meets the boundary; crossing endpoints always do.
inline bool bridge_touches(double a, double b, double h, RandomStream& rng) {
  if (a == 0.0 || b == 0.0 || (a < 0.0) != (b < 0.0)) return true;
  const double exponent = 2.0 * a * b / h;
  if (exponent > 40.0) return false;
  return rng.uniform() < std::exp(-exponent);
}

inline std::uint64_t grid_steps(const RatchetParams& p) {
  return static_cast<std::uint64_t>(std::floor(p.t_max / p.dt * (1.0 + 1e-12)));
}

inline StepResult thinning_step(const RatchetState& s, double t_next, double dt,
                                double increment, const StepModel& m,
                                ReplicaStreams& rng, JumpClock& clock) {
  StepResult out;
  const double gap0 = s.x - s.r;
  const double raw = gap0 + m.drift * dt + increment;
  const double gap1 = std::fabs(raw);
  out.touched = raw <= 0.0 || bridge_touches(gap0, raw, dt, rng.touches);
  out.state = {t_next, s.r + gap1, s.r};
  const double hazard =
      (m.lebesgue_rate * 0.5 * (gap0 + gap1) + m.atom_rate) * dt;
  if (hazard > 0.0 && clock.fires(hazard)) {
    double r_post;
    if (m.atom_rate > 0.0 &&
        (m.lebesgue_rate == 0.0 ||
         rng.jumps.uniform() * (m.lebesgue_rate * 0.5 * (gap0 + gap1) + m.atom_rate) <
             m.atom_rate)) {
      r_post = out.state.x;
    } else {
      r_post = s.r + rng.jumps.uniform() * gap1;
    }
    out.jumped = true;
    out.jump = {t_next, out.state.x, s.r, r_post};
    out.state.r = r_post;
  }
  return out;
}

}  // namespace detail

/// One thinning step of size dt for the base ratchet.
inline StepResult step_thinning(const RatchetState& state, double dt,
                                double gamma, ReplicaStreams& rng) {
  if (!(state.r <= state.x)) throw std::invalid_argument("step_thinning: r > x");
  JumpClock clock(rng.jumps);
  const double inc = std::sqrt(dt) * rng.brownian.normal();
  return detail::thinning_step(state, state.t + dt, dt, inc, {gamma, 0.0, 0.0},
                               rng, clock);
}

struct ThinningOptions {
  /// Each step's Brownian increment is the sum of this many normals. A run
  /// at (dt, 2) and one at (dt / 2, 1) on the same seed share their paths.
  unsigned normals_per_step = 1;
};

/// Thinning engine for the base ratchet and the drift and binding-measure
/// variants.
template <class Observer>
void simulate_path(const RatchetParams& p, ReplicaStreams& rng, Observer& obs,
                   ThinningOptions opt = {}) {
  require_valid(p);
  const StepModel model = step_model(p);
  const std::uint64_t steps = detail::grid_steps(p);
  const unsigned k = std::max(1u, opt.normals_per_step);
  const double sub_scale = std::sqrt(p.dt / k);
  JumpClock clock(rng.jumps);
  RatchetState s{0.0, p.x0, 0.0};
  if (s.x == s.r) detail::emit_touch(obs, {0.0, 0.0});
  detail::emit_sample(obs, s, true);
  for (std::uint64_t i = 1; i <= steps; ++i) {
    double z = rng.brownian.normal();
    for (unsigned j = 1; j < k; ++j) z += rng.brownian.normal();
    const auto out = detail::thinning_step(s, static_cast<double>(i) * p.dt,
                                           p.dt, sub_scale * z, model, rng, clock);
    if (out.touched) detail::emit_touch(obs, {out.state.t, s.r});
    if (out.jumped) detail::emit_jump(obs, out.jump);
    s = out.state;
    detail::emit_sample(obs, s, true);
  }
}

/// Graphical construction: one driving Brownian path B and a space-time
/// Poisson field of intensity gamma. The boundary point S jumps to the first
/// field point between S and B; R is the total variation of S and
/// X = R + |B - S|.
template <class Observer>
void simulate_graphical(const RatchetParams& p, ReplicaStreams& rng,
                        Observer& obs) {
  require_valid(p);
  if (p.engine != Engine::graphical)
    throw std::invalid_argument("simulate_graphical: engine must be graphical");
  const std::uint64_t steps = detail::grid_steps(p);
  const double sqrt_dt = std::sqrt(p.dt);
  JumpClock clock(rng.jumps);
  double b = p.x0, s = 0.0, r = 0.0;
  if (b == s) detail::emit_touch(obs, {0.0, 0.0});
  detail::emit_driver(obs, 0.0, b, s);
  detail::emit_sample(obs, {0.0, std::fabs(b - s), r}, true);

  struct Point {
    double u_time, u_space;
  };
  std::array<Point, 16> points{};
  for (std::uint64_t i = 1; i <= steps; ++i) {
    const double t0 = static_cast<double>(i - 1) * p.dt;
    const double t1 = static_cast<double>(i) * p.dt;
    const double b1 = b + sqrt_dt * rng.brownian.normal();
    const double lo = std::min({b, b1, s});
    const double hi = std::max({b, b1, s});
    const double height = hi - lo;
    std::uint64_t n = clock.count(p.gamma * p.dt * height);
    n = std::min<std::uint64_t>(n, points.size());
    double seg_t = t0, seg_b = b;
    if (n > 0) {
      for (std::uint64_t j = 0; j < n; ++j)
        points[j] = {rng.jumps.uniform(), rng.jumps.uniform()};
      std::sort(points.begin(), points.begin() + static_cast<std::ptrdiff_t>(n),
                [](const Point& a, const Point& c) { return a.u_time < c.u_time; });
      for (std::uint64_t j = 0; j < n; ++j) {
        const double tp = t0 + points[j].u_time * p.dt;
        const double bp = b + (b1 - b) * points[j].u_time;
        const double sp = lo + points[j].u_space * height;
        if (sp < std::min(s, bp) || sp > std::max(s, bp)) continue;
        if (tp > seg_t && detail::bridge_touches(seg_b - s, bp - s, tp - seg_t, rng.touches))
          detail::emit_touch(obs, {tp, r});
        const JumpEvent jump{tp, r + std::fabs(bp - s), r, r + std::fabs(sp - s)};
        detail::emit_point(obs, {tp, sp, bp});
        detail::emit_jump(obs, jump);
        r = jump.r_post;
        s = sp;
        detail::emit_sample(obs, {tp, r + std::fabs(bp - s), r}, false);
        seg_t = tp;
        seg_b = bp;
      }
    }
    if (detail::bridge_touches(seg_b - s, b1 - s, t1 - seg_t, rng.touches))
      detail::emit_touch(obs, {t1, r});
    b = b1;
    detail::emit_driver(obs, t1, b, s);
    detail::emit_sample(obs, {t1, r + std::fabs(b - s), r}, true);
  }
}

/// Runs the engine named in params.
template <class Observer>
void simulate(const RatchetParams& p, ReplicaStreams& rng, Observer& obs) {
  if (p.engine == Engine::graphical)
    simulate_graphical(p, rng, obs);
  else
    simulate_path(p, rng, obs);
}

template <class Observer>
void simulate(const RatchetParams& p, std::uint64_t replica, Observer& obs) {
  ReplicaStreams rng(p.seed, replica);
  simulate(p, rng, obs);
}

// ---------------------------------------------------------------------------
// Observers

/// Stores the path. Grid samples are thinned to every `stride`-th one; jump
/// samples, jumps and touches are always kept.
class TrajectoryRecorder {
 public:
  explicit TrajectoryRecorder(const RatchetParams& p, std::uint64_t stride = 1)
      : stride_(std::max<std::uint64_t>(1, stride)) {
    traj_.params = p;
  }

  void on_sample(const RatchetState& s, bool on_grid) {
    if (!on_grid || grid_index_++ % stride_ == 0) traj_.samples.push_back(s);
  }
  void on_jump(const JumpEvent& j) { traj_.jumps.push_back(j); }
  void on_touch(const BoundaryTouch& t) { traj_.touches.push_back(t); }

  Trajectory& trajectory() { return traj_; }
  Trajectory release() { return std::move(traj_); }

 private:
  Trajectory traj_;
  std::uint64_t stride_;
  std::uint64_t grid_index_ = 0;
};

/// Keeps the state at the last grid time.
struct FinalState {
  RatchetState state;
  void on_sample(const RatchetState& s, bool on_grid) {
    if (on_grid) state = s;
  }
};

/// Records the state at fixed observation times (each rounded to the grid).
class Snapshots {
 public:
  Snapshots(std::vector<double> times, double dt) {
    for (double t : times)
      steps_.push_back(static_cast<std::uint64_t>(std::llround(t / dt)));
    values_.resize(steps_.size());
  }
  void on_sample(const RatchetState& s, bool on_grid) {
    if (!on_grid) return;
    for (std::size_t k = 0; k < steps_.size(); ++k)
      if (steps_[k] == index_) values_[k] = s;
    ++index_;
  }
  const std::vector<RatchetState>& values() const { return values_; }

 private:
  std::vector<std::uint64_t> steps_;
  std::vector<RatchetState> values_;
  std::uint64_t index_ = 0;
};

/// Fans one event stream out to several observers.
template <class... Os>
struct Tee {
  std::tuple<Os&...> parts;
  explicit Tee(Os&... os) : parts(os...) {}

  void on_sample(const RatchetState& s, bool g) {
    std::apply([&](auto&... o) { (detail::emit_sample(o, s, g), ...); }, parts);
  }
  void on_jump(const JumpEvent& j) {
    std::apply([&](auto&... o) { (detail::emit_jump(o, j), ...); }, parts);
  }
  void on_touch(const BoundaryTouch& t) {
    std::apply([&](auto&... o) { (detail::emit_touch(o, t), ...); }, parts);
  }
  void on_poisson_point(const GraphicalEvent& e) {
    std::apply([&](auto&... o) { (detail::emit_point(o, e), ...); }, parts);
  }
  void on_driver(double t, double b, double s) {
    std::apply([&](auto&... o) { (detail::emit_driver(o, t, b, s), ...); }, parts);
  }
  void on_bound_count(double t, std::size_t n) {
    std::apply([&](auto&... o) { (detail::emit_bound_count(o, t, n), ...); }, parts);
  }
};

inline Trajectory simulate_path(const RatchetParams& p, std::uint64_t replica = 0) {
  RatchetParams q = p;
  q.engine = Engine::thinning;
  ReplicaStreams rng(q.seed, replica);
  TrajectoryRecorder rec(q);
  simulate_path(q, rng, rec);
  return rec.release();
}

inline Trajectory simulate_graphical(const RatchetParams& p,
                                     std::uint64_t replica = 0) {
  RatchetParams q = p;
  q.engine = Engine::graphical;
  ReplicaStreams rng(q.seed, replica);
  TrajectoryRecorder rec(q);
  simulate_graphical(q, rng, rec);
  return rec.release();
}

}  // namespace ratchet
