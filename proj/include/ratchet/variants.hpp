#pragma once

// Model extensions: dissociating ratcheting molecules, drift, and binding
// measures with an atom at the pore.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "ratchet/core.hpp"
#include "ratchet/engine.hpp"
#include "ratchet/random.hpp"
#include "ratchet/renewal.hpp"
#include "ratchet/special.hpp"

namespace ratchet {

/// Positions of the bound molecules; the reflection point is their maximum
/// (0 when none are bound).
class BoundSet {
 public:
  static constexpr std::size_t kCapacity = 1'000'000;

  void add(double position) {
    if (positions_.size() >= kCapacity)
      throw std::runtime_error("BoundSet: more than 1e6 bound molecules");
    positions_.push_back(position);
    max_ = std::max(max_, position);
  }

  /// Removes the molecule at index i (swap-and-pop).
  void remove(std::size_t i) {
    const double gone = positions_[i];
    positions_[i] = positions_.back();
    positions_.pop_back();
    if (gone == max_) {
      max_ = 0.0;
      for (double p : positions_) max_ = std::max(max_, p);
    }
  }

  std::size_t size() const { return positions_.size(); }
  bool empty() const { return positions_.empty(); }
  double reflection_point() const { return max_; }
  const std::vector<double>& positions() const { return positions_; }

 private:
  std::vector<double> positions_;
  double max_ = 0.0;
};

namespace detail {

/// Molecules bind on [0, X] (or [R, X]) at rate gamma per unit length and
/// dissociate independently at dissociation_rate each.
template <class Observer>
void simulate_dissociation(const RatchetParams& p, ReplicaStreams& rng,
                           RandomStream& removals, Observer& obs) {
  const auto& v = p.variant;
  const std::uint64_t steps = grid_steps(p);
  const double sqrt_dt = std::sqrt(p.dt);
  JumpClock bind_clock(rng.jumps);
  JumpClock unbind_clock(removals);
  BoundSet bound;
  RatchetState s{0.0, p.x0, 0.0};
  if (s.x == s.r) emit_touch(obs, {0.0, 0.0});
  emit_sample(obs, s, true);
  for (std::uint64_t i = 1; i <= steps; ++i) {
    const double t = static_cast<double>(i) * p.dt;
    const double gap0 = s.x - s.r;
    const double raw = gap0 + sqrt_dt * rng.brownian.normal();
    if (raw <= 0.0 || bridge_touches(gap0, raw, p.dt, rng.touches))
      emit_touch(obs, {t, s.r});
    const double x1 = s.r + std::fabs(raw);
    const double r_before = s.r;

    const double floor0 = v.bind_above_boundary ? s.r : 0.0;
    const double span = 0.5 * ((s.x - floor0) + (x1 - floor0));
    const std::uint64_t added = bind_clock.count(p.gamma * span * p.dt);
    for (std::uint64_t k = 0; k < added; ++k)
      bound.add(floor0 + rng.jumps.uniform() * (x1 - floor0));
    if (v.dissociation_rate > 0.0 && !bound.empty()) {
      const std::uint64_t gone = unbind_clock.count(
          v.dissociation_rate * static_cast<double>(bound.size()) * p.dt);
      for (std::uint64_t k = 0; k < gone && !bound.empty(); ++k) {
        const auto idx = static_cast<std::size_t>(removals.uniform() *
                                                  static_cast<double>(bound.size()));
        bound.remove(std::min(idx, bound.size() - 1));
      }
    }
    s = {t, x1, bound.reflection_point()};
    if (s.r != r_before) {
      emit_jump(obs, JumpEvent{t, x1, r_before, s.r});
      emit_bound_count(obs, t, bound.size());
    }
    emit_sample(obs, s, true);
  }
}

}  // namespace detail

/// Runs any variant; drift and binding-measure variants use the thinning
/// engine unchanged.
template <class Observer>
void simulate_variant(const RatchetParams& p, std::uint64_t replica, Observer& obs) {
  require_valid(p);
  if (p.variant.kind == VariantKind::none)
    throw std::invalid_argument("simulate_variant: variant kind is none");
  ReplicaStreams rng(p.seed, replica);
  if (p.variant.kind == VariantKind::dissociation) {
    RandomStream removals(p.seed, replica, Substream::aux);
    detail::simulate_dissociation(p, rng, removals, obs);
  } else {
    simulate_path(p, rng, obs);
  }
}

/// Dispatches on the variant kind, so the base model and every variant run
/// through one entry point.
template <class Observer>
void simulate_any(const RatchetParams& p, std::uint64_t replica, Observer& obs) {
  if (p.variant.kind == VariantKind::none)
    simulate(p, replica, obs);
  else
    simulate_variant(p, replica, obs);
}

inline Trajectory simulate_variant(const RatchetParams& p, std::uint64_t replica = 0) {
  TrajectoryRecorder rec(p);
  simulate_variant(p, replica, rec);
  return rec.release();
}

/// Bound-molecule counts at each reflection-point change.
struct BoundCountLog {
  std::vector<std::pair<double, std::size_t>> rows;
  void on_bound_count(double t, std::size_t n) { rows.emplace_back(t, n); }
};

inline void write_bound_counts_csv(std::ostream& out, const BoundCountLog& log) {
  out << "t,n_bound\n" << std::setprecision(17);
  for (const auto& [t, n] : log.rows) out << t << ',' << n << '\n';
}

// ---------------------------------------------------------------------------
// Atom at the pore

/// Speed of the ratchet whose boundary jumps onto X at constant rate gamma.
inline double delta_ratchet_speed(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw std::domain_error("delta_ratchet_speed: gamma must be positive");
  return std::sqrt(gamma / 2.0);
}

/// Rate at which the atom-at-pore ratchet and the base ratchet move equally
/// fast: sqrt(gamma / 2) = c gamma^{1/3} gives gamma = 8 c^6, c = C_1.
inline double delta_crossover_gamma() {
  const double c = special::asymptotic_constants(1.0).speed;
  return 8.0 * std::pow(c, 6.0);
}

inline RatchetParams delta_params(double gamma, double t_max, double dt,
                                  std::uint64_t seed) {
  RatchetParams p;
  p.gamma = gamma;
  p.t_max = t_max;
  p.dt = dt;
  p.seed = seed;
  p.variant.kind = VariantKind::binding_measure;
  p.variant.binding = Binding::delta_at_pore;
  return p;
}

/// Gaps at the jumps of the atom-at-pore ratchet, i.e. reflected Brownian
/// motion from 0 read at independent Exp(gamma) times, tested against the
/// exponential law of rate sqrt(2 gamma).
struct DeltaJumpCheck {
  KsResult ks;
  double mean = 0.0;
  double mean_se = 0.0;
  double expected_mean = 0.0;
  std::vector<double> positions;
};

inline DeltaJumpCheck delta_jump_position_check(double gamma, std::size_t n,
                                                double dt, std::uint64_t seed) {
  if (!(gamma > 0.0)) throw std::domain_error("delta_jump_position_check: gamma <= 0");
  struct Collect {
    std::vector<double> gaps;
    void on_jump(const JumpEvent& j) { gaps.push_back(j.x_pre - j.r_pre); }
  };
  Collect c;
  // Jumps arrive at rate gamma; run in chunks until n have been seen.
  const double chunk = 1.2 * static_cast<double>(n) / gamma + 50.0 / gamma;
  for (std::uint64_t replica = 0; c.gaps.size() < n; ++replica) {
    simulate(delta_params(gamma, chunk, dt, seed), replica, c);
  }
  c.gaps.resize(n);
  DeltaJumpCheck out;
  const double rate = std::sqrt(2.0 * gamma);
  out.expected_mean = 1.0 / rate;
  double s = 0, s2 = 0;
  for (double g : c.gaps) {
    s += g;
    s2 += g * g;
  }
  const double nd = static_cast<double>(n);
  out.mean = s / nd;
  out.mean_se = std::sqrt(std::max(0.0, s2 / nd - out.mean * out.mean) / (nd - 1.0));
  out.ks = ks_one_sample(c.gaps, [rate](double v) { return 1.0 - std::exp(-rate * v); });
  out.positions = std::move(c.gaps);
  return out;
}

}  // namespace ratchet
