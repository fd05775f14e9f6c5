#pragma once

// Regeneration structure and the statistics used on it: renewal detection,
// renewal-reward estimators of speed and diffusion constant, Kolmogorov-Smirnov
// tests, a normality check and an exponential-tail fit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "ratchet/core.hpp"
#include "ratchet/special.hpp"

namespace ratchet {

struct RenewalCycle {
  double duration = 0.0;
  double displacement = 0.0;
};

/// A regeneration time rho_n and X at that time (where X = R).
struct RenewalPoint {
  double t = 0.0;
  double x = 0.0;
};

/// Online detector. rho_0 is the first boundary contact; rho_{n+1} the first
/// contact after the first jump following rho_n.
class RenewalTracker {
 public:
  void on_touch(const BoundaryTouch& t) {
    if (armed_ || points_.empty()) {
      points_.push_back({t.t, t.r});
      armed_ = false;
    }
  }
  void on_jump(const JumpEvent&) {
    if (!points_.empty()) armed_ = true;
  }

  const std::vector<RenewalPoint>& points() const { return points_; }
  std::vector<RenewalPoint> release() { return std::move(points_); }

 private:
  std::vector<RenewalPoint> points_;
  bool armed_ = false;
};

inline std::vector<RenewalCycle> cycles_from_points(std::span<const RenewalPoint> pts) {
  std::vector<RenewalCycle> out;
  for (std::size_t i = 1; i < pts.size(); ++i)
    out.push_back({pts[i].t - pts[i - 1].t, pts[i].x - pts[i - 1].x});
  return out;
}

/// Default contact tolerance for paths without engine touch flags.
inline constexpr double kCsvRenewalTolerance = 1e-9;

/// Renewal points of a recorded path. Engine paths carry exact contact flags,
/// used when tolerance is 0; otherwise grid samples with x - r <= tolerance
/// count as contacts.
inline std::vector<RenewalPoint> renewal_points(const Trajectory& traj,
                                                double tolerance) {
  if (!(tolerance >= 0.0)) throw std::invalid_argument("renewal: tolerance < 0");
  RenewalTracker tracker;
  const bool flags = tolerance == 0.0 && !traj.touches.empty();
  std::size_t j = 0;
  if (flags) {
    // A contact reported at a jump time precedes that jump.
    for (const auto& touch : traj.touches) {
      while (j < traj.jumps.size() && traj.jumps[j].tau < touch.t)
        tracker.on_jump(traj.jumps[j++]);
      tracker.on_touch(touch);
    }
  } else {
    // Samples at a jump time show the post-jump state.
    for (const auto& s : traj.samples) {
      while (j < traj.jumps.size() && traj.jumps[j].tau <= s.t)
        tracker.on_jump(traj.jumps[j++]);
      if (s.x - s.r <= tolerance) tracker.on_touch({s.t, s.x});
    }
  }
  return tracker.release();
}

inline std::vector<RenewalCycle> detect_renewals(const Trajectory& traj,
                                                 double tolerance = 0.0) {
  const auto pts = renewal_points(traj, tolerance);
  return cycles_from_points(pts);
}

// ---------------------------------------------------------------------------
// Cumulative-process decomposition X_t = S_{M_t} + A_t

/// Remainder A_t = X_{rho_0} + X_t - X_{rho_{M_t}} with M_t the index of the
/// first renewal after t; empty when no renewal follows t.
inline std::optional<double> remainder(std::span<const RenewalPoint> pts,
                                       double t, double x_t) {
  auto it = std::upper_bound(pts.begin(), pts.end(), t,
                             [](double v, const RenewalPoint& p) { return v < p.t; });
  if (it == pts.end()) return std::nullopt;
  return pts.front().x + x_t - it->x;
}

struct DecompositionCheck {
  std::size_t checked = 0;
  double max_residual = 0.0;
};

/// Rebuilds every covered sample as (sum of completed cycle displacements)
/// plus remainder and reports the worst mismatch.
inline DecompositionCheck check_decomposition(const Trajectory& traj,
                                              std::span<const RenewalPoint> pts) {
  DecompositionCheck out;
  if (pts.empty()) return out;
  std::vector<double> partial(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i)
    partial[i] = partial[i - 1] + (pts[i].x - pts[i - 1].x);
  for (const auto& s : traj.samples) {
    auto it = std::upper_bound(pts.begin(), pts.end(), s.t,
                               [](double v, const RenewalPoint& p) { return v < p.t; });
    if (it == pts.end()) break;
    const auto m = static_cast<std::size_t>(it - pts.begin());
    const double a = pts.front().x + s.x - it->x;
    const double rebuilt = partial[m] + a;
    out.max_residual = std::max(out.max_residual, std::fabs(rebuilt - s.x));
    ++out.checked;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Renewal-reward estimators

struct CycleStatistics {
  double r_hat = 0.0;
  double mu_hat = 0.0;
  double beta2_hat = 0.0;
  double speed = 0.0;
  double speed_se = 0.0;
  double sigma_hat = 0.0;
  double sigma_se = 0.0;
  std::size_t n_cycles = 0;
  double duration_m2 = 0.0;
  double displacement_m2 = 0.0;
  /// Lag-1 autocorrelation of the displacements.
  double displacement_lag1 = 0.0;
};

inline constexpr std::size_t kMinCycles = 30;

namespace detail {

struct CycleSums {
  double d = 0, v = 0, dd = 0, ee = 0, ed = 0;
};

// Plug-in estimators for a subset whose centred sums are given; e = v - d s0.
inline std::pair<double, double> speed_sigma(const CycleSums& c, double n, double s0) {
  const double speed = c.v / c.d;
  const double delta = speed - s0;
  const double ss = c.ee - 2.0 * delta * c.ed + delta * delta * c.dd;
  const double beta2 = std::max(0.0, ss / (n - 1.0));
  return {speed, std::sqrt(beta2 / (c.d / n))};
}

}  // namespace detail

/// Renewal-reward estimates of speed mu/r and sigma = sqrt(beta^2 / r), with
/// leave-one-cycle-out jackknife standard errors.
inline CycleStatistics cycle_statistics(std::span<const RenewalCycle> cycles) {
  const std::size_t n = cycles.size();
  if (n < kMinCycles)
    throw std::invalid_argument("cycle_statistics: need at least 30 cycles, got " +
                                std::to_string(n));
  CycleStatistics st;
  st.n_cycles = n;
  const double nd = static_cast<double>(n);
  double sd = 0, sv = 0;
  for (const auto& c : cycles) {
    sd += c.duration;
    sv += c.displacement;
  }
  const double s0 = sv / sd;
  detail::CycleSums all;
  double sdd2 = 0, svv2 = 0;
  for (const auto& c : cycles) {
    const double e = c.displacement - c.duration * s0;
    all.d += c.duration;
    all.v += c.displacement;
    all.dd += c.duration * c.duration;
    all.ee += e * e;
    all.ed += e * c.duration;
    sdd2 += c.duration * c.duration;
    svv2 += c.displacement * c.displacement;
  }
  st.r_hat = all.d / nd;
  st.mu_hat = all.v / nd;
  st.speed = all.v / all.d;
  st.beta2_hat = all.ee / (nd - 1.0);
  st.sigma_hat = std::sqrt(st.beta2_hat / st.r_hat);
  st.duration_m2 = sdd2 / nd;
  st.displacement_m2 = svv2 / nd;

  double js = 0, js2 = 0, jg = 0, jg2 = 0;
  for (const auto& c : cycles) {
    const double e = c.displacement - c.duration * s0;
    detail::CycleSums loo = all;
    loo.d -= c.duration;
    loo.v -= c.displacement;
    loo.dd -= c.duration * c.duration;
    loo.ee -= e * e;
    loo.ed -= e * c.duration;
    const auto [sp, sg] = detail::speed_sigma(loo, nd - 1.0, s0);
    js += sp;
    js2 += sp * sp;
    jg += sg;
    jg2 += sg * sg;
  }
  auto jack_se = [nd](double sum, double sum2) {
    const double mean = sum / nd;
    const double var = std::max(0.0, sum2 / nd - mean * mean);
    return std::sqrt((nd - 1.0) * var);
  };
  st.speed_se = jack_se(js, js2);
  st.sigma_se = jack_se(jg, jg2);

  double mv = st.mu_hat, num = 0, den = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = cycles[i].displacement - mv;
    den += a * a;
    if (i + 1 < n) num += a * (cycles[i + 1].displacement - mv);
  }
  st.displacement_lag1 = den > 0 ? num / den : 0.0;
  return st;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// P(K > lambda) for the Kolmogorov distribution.
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (lambda < 1.0) {
    // Dual (Jacobi) form converges fast for small lambda.
    const double c = pi * pi / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double m = 2.0 * k - 1.0;
      cdf += std::exp(-m * m * c);
    }
    cdf *= std::sqrt(2.0 * pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// Asymptotic p-value with Stephens' finite-n correction.
inline double ks_p_value(double d, double n_eff) {
  const double rn = std::sqrt(n_eff);
  return kolmogorov_survival((rn + 0.12 + 0.11 / rn) * d);
}

inline constexpr std::size_t kMinKsSample = 10;

template <class Cdf>
KsResult ks_one_sample(std::vector<double> samples, Cdf&& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  if (samples.size() < kMinKsSample)
    throw std::invalid_argument("ks_one_sample: need at least 10 values");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, ks_p_value(d, n)};
}

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  if (a.size() < kMinKsSample || b.size() < kMinKsSample)
    throw std::invalid_argument("ks_two_sample: need at least 10 values per sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, ks_p_value(d, na * nb / (na + nb))};
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// ---------------------------------------------------------------------------
// CLT check and tail fit

struct CltCheck {
  double sigma_hat = 0.0;
  double sigma_se = 0.0;
  double mean_offset = 0.0;
  KsResult ks_normal;
};

inline constexpr std::size_t kMinCltReplicas = 500;

/// Standardises (X_t - C_gamma t) / (sigma_hat sqrt(t)) with the analytic speed
/// and the ensemble's own spread, and tests the result for normality.
inline CltCheck clt_check(std::span<const double> x_t, double t, double gamma) {
  if (x_t.size() < kMinCltReplicas)
    throw std::invalid_argument("clt_check: need at least 500 replicas");
  if (!(t > 0.0)) throw std::invalid_argument("clt_check: t must be positive");
  const double c = special::asymptotic_constants(gamma).speed;
  const double n = static_cast<double>(x_t.size());
  double mean = 0.0;
  for (double v : x_t) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : x_t) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  CltCheck out;
  out.sigma_hat = sd / std::sqrt(t);
  out.sigma_se = out.sigma_hat / std::sqrt(2.0 * (n - 1.0));
  out.mean_offset = mean - c * t;
  std::vector<double> z;
  z.reserve(x_t.size());
  for (double v : x_t) z.push_back((v - c * t) / sd);
  out.ks_normal = ks_one_sample(std::move(z), normal_cdf);
  return out;
}

struct TailFit {
  double rate = 0.0;
  double r_squared = 0.0;
};

inline constexpr std::size_t kMinTailSample = 100;

/// Least-squares line through log empirical survival against value, over the
/// upper half of the sample; rate is minus the slope.
inline TailFit exp_tail_fit(std::vector<double> samples) {
  if (samples.size() < kMinTailSample)
    throw std::invalid_argument("exp_tail_fit: need at least 100 values");
  std::sort(samples.begin(), samples.end());
  if (samples.front() == samples.back())
    throw std::invalid_argument("exp_tail_fit: degenerate sample");
  const std::size_t n = samples.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0, m = 0;
  for (std::size_t i = n / 2; i < n; ++i) {
    const double x = samples[i];
    const double y = std::log(static_cast<double>(n - i) / static_cast<double>(n));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    m += 1.0;
  }
  const double cxx = sxx - sx * sx / m;
  const double cxy = sxy - sx * sy / m;
  const double cyy = syy - sy * sy / m;
  if (cxx <= 0.0 || cyy <= 0.0) throw std::invalid_argument("exp_tail_fit: degenerate sample");
  return {-cxy / cxx, cxy * cxy / (cxx * cyy)};
}

// ---------------------------------------------------------------------------
// CSV

inline void write_cycles_csv(std::ostream& out, std::span<const RenewalCycle> cycles) {
  out << "n,duration,displacement\n" << std::setprecision(17);
  std::size_t n = 1;
  for (const auto& c : cycles) out << n++ << ',' << c.duration << ',' << c.displacement << '\n';
}

}  // namespace ratchet
