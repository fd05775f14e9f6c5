#pragma once

// The experiments behind the CLI commands. Each returns an ExperimentReport
// whose tests carry the pass/fail verdicts.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ratchet/core.hpp"
#include "ratchet/engine.hpp"
#include "ratchet/jumpchain.hpp"
#include "ratchet/parallel.hpp"
#include "ratchet/quadrature.hpp"
#include "ratchet/renewal.hpp"
#include "ratchet/report.hpp"
#include "ratchet/special.hpp"
#include "ratchet/variants.hpp"

namespace ratchet::experiments {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(std::span<const double> v) {
  if (v.empty()) return {std::nan(""), std::nan("")};
  const double n = static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += x;
  const double mean = s / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : std::nan("")};
}

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline ExperimentReport start_report(const std::string& command, const ExperimentConfig& c) {
  ExperimentReport r;
  r.command = command;
  r.params_echo = to_json(c);
  r.seed = c.seed;
  return r;
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

/// Opens a file in the configured output directory, or nothing when no
/// directory was requested.
inline std::optional<std::ofstream> open_output(const ExperimentConfig& c,
                                                const std::string& name) {
  if (c.out.empty()) return std::nullopt;
  std::filesystem::create_directories(c.out);
  std::ofstream f(std::filesystem::path(c.out) / name);
  if (!f) throw std::runtime_error("cannot write " + (std::filesystem::path(c.out) / name).string());
  return f;
}

/// Ratio estimator sum(a) / sum(b) with a batch-means standard error.
inline MeanSe batched_ratio(std::span<const double> a, std::span<const double> b,
                            std::size_t batches = 50) {
  double sa = 0, sb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
  }
  std::vector<double> ratios;
  const std::size_t len = a.size() / batches;
  for (std::size_t k = 0; k < batches && len > 0; ++k) {
    double ba = 0, bb = 0;
    for (std::size_t i = k * len; i < (k + 1) * len; ++i) {
      ba += a[i];
      bb += b[i];
    }
    ratios.push_back(ba / bb);
  }
  return {sa / sb, mean_se(ratios).se};
}

/// Final positions X_t of an ensemble.
inline std::vector<double> final_positions(const RatchetParams& p, unsigned threads) {
  auto states = parallel_map(p.replicas, threads, [&](std::uint64_t i) {
    FinalState f;
    simulate_any(p, i, f);
    return f.state;
  });
  std::vector<double> x;
  x.reserve(states.size());
  for (const auto& s : states) x.push_back(s.x);
  return x;
}

inline void require_at_least(std::uint64_t v, std::uint64_t floor, const char* what) {
  if (v < floor)
    throw ConfigError(std::string(what) + " must be at least " + std::to_string(floor));
}

/// Every consecutive pair decreasing within 2 pooled standard errors, and the
/// last value below the first.
inline bool decreasing_within_noise(std::span<const MeanSe> v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i].mean > v[i - 1].mean + 2.0 * std::hypot(v[i].se, v[i - 1].se)) return false;
  return v.back().mean < v.front().mean;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// speed

struct SpeedReplica {
  std::array<RatchetState, 3> snapshots{};
  std::vector<RenewalPoint> renewals;
  std::vector<double> jump_fractions;
  DecompositionCheck decomposition;
  Trajectory trajectory;
};

inline constexpr std::size_t kJumpFractionsPerReplica = 50;

/// Law of large numbers, with the renewal and jump-chain estimators next to
/// the ensemble mean, plus the structural checks on the same ensemble.
inline ExperimentReport run_speed(const ExperimentConfig& c) {
  detail::Stopwatch clock;
  validate_config(c);
  auto report = detail::start_report("speed", c);
  const double c_gamma = special::asymptotic_constants(c.gamma).speed;
  report.analytic("speed_analytic", c_gamma);
  report.analytic("sigma_conjectured", special::asymptotic_constants(c.gamma).sigma_conjectured);

  // Run past t_max so the remainder at t_max sees the next renewal.
  RatchetParams p = c.params();
  p.t_max = c.t_max + 50.0 * std::pow(c.gamma, -2.0 / 3.0);
  const std::array<double, 3> obs_times{c.t_max / 4.0, c.t_max / 2.0, c.t_max};

  auto runs = parallel_map(c.replicas, c.threads, [&](std::uint64_t i) {
    SpeedReplica out;
    Snapshots snaps({obs_times.begin(), obs_times.end()}, p.dt);
    RenewalTracker tracker;
    struct Fractions {
      std::vector<double>* dst;
      void on_jump(const JumpEvent& j) {
        if (dst->size() < kJumpFractionsPerReplica && j.x_pre > j.r_pre)
          dst->push_back((j.r_post - j.r_pre) / (j.x_pre - j.r_pre));
      }
    } fractions{&out.jump_fractions};
    if (c.decomposition) {
      TrajectoryRecorder rec(p);
      Tee tee(snaps, tracker, fractions, rec);
      simulate(p, i, tee);
      out.trajectory = rec.release();
      out.decomposition = check_decomposition(out.trajectory, tracker.points());
      if (i != 0) out.trajectory = {};
    } else {
      Tee tee(snaps, tracker, fractions);
      simulate(p, i, tee);
    }
    std::copy(snaps.values().begin(), snaps.values().end(), out.snapshots.begin());
    out.renewals = tracker.release();
    return out;
  });

  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r.snapshots[2].x / c.t_max);
  const MeanSe ens = mean_se(v);
  report.metric("speed_ensemble", ens.mean, ens.se);
  const double dev = ens.mean / c_gamma - 1.0;
  report.test("ensemble_within_2pct", std::fabs(dev), std::fabs(dev) <= 0.02,
              "relative deviation from C_gamma, limit 0.02");
  report.test("ensemble_within_3se", std::fabs(ens.mean - c_gamma) / ens.se,
              std::fabs(ens.mean - c_gamma) <= 3.0 * ens.se,
              "|mean - C_gamma| / stderr, limit 3");

  std::vector<RenewalCycle> cycles;
  for (const auto& r : runs) {
    const auto cs = cycles_from_points(r.renewals);
    cycles.insert(cycles.end(), cs.begin(), cs.end());
  }
  if (cycles.size() >= kMinCycles) {
    const auto st = cycle_statistics(cycles);
    report.metric("speed_renewal", st.speed, st.speed_se);
    report.metric("sigma_renewal", st.sigma_hat, st.sigma_se);
    report.count("n_cycles", static_cast<double>(st.n_cycles));
    report.metric("cycle_displacement_lag1", st.displacement_lag1,
                  1.0 / std::sqrt(static_cast<double>(st.n_cycles)));
    const double rdev = st.speed / c_gamma - 1.0;
    report.test("renewal_within_2pct", std::fabs(rdev), std::fabs(rdev) <= 0.02,
                "relative deviation of the renewal estimate, limit 0.02");
    const double lag_z = std::fabs(st.displacement_lag1) * std::sqrt(static_cast<double>(st.n_cycles));
    report.test("cycle_independence", lag_z, lag_z <= 3.0,
                "|lag-1 autocorrelation| * sqrt(n), limit 3");
  } else {
    report.test("renewal_within_2pct", 0.0, false, "fewer than 30 renewal cycles");
  }
  if (auto f = detail::open_output(c, "cycles.csv")) write_cycles_csv(*f, cycles);

  if (c.steps > 0) {
    RandomStream rng(c.seed, 0, Substream::aux);
    const auto chain = run_chain(c.steps + 1000, 0.0, rng);
    std::vector<double> w, eta;
    for (std::size_t i = 1000; i < chain.size(); ++i) {
      w.push_back(chain[i].w);
      eta.push_back(chain[i].eta_expected);
    }
    const auto half = detail::batched_ratio(w, eta);
    const double factor = std::cbrt(2.0 * c.gamma);
    report.metric("speed_chain", half.mean * factor, half.se * factor);
    const double cdev = half.mean * factor / c_gamma - 1.0;
    report.test("chain_within_1pct", std::fabs(cdev), std::fabs(cdev) <= 0.01,
                "relative deviation of the jump-chain estimate, limit 0.01");
  }

  std::vector<double> fr;
  for (const auto& r : runs) fr.insert(fr.end(), r.jump_fractions.begin(), r.jump_fractions.end());
  if (fr.size() >= kMinKsSample) {
    const auto ks = ks_one_sample(fr, [](double u) { return std::clamp(u, 0.0, 1.0); });
    report.count("jump_fractions", static_cast<double>(fr.size()));
    report.test("uniform_jump_ks", ks.statistic, ks.p_value >= c.alpha,
                "KS of (r_post - r_pre)/(x_pre - r_pre) against U(0,1)", ks.p_value);
  }

  if (c.decomposition) {
    double worst = 0.0;
    double checked = 0.0;
    for (const auto& r : runs) {
      worst = std::max(worst, r.decomposition.max_residual);
      checked += static_cast<double>(r.decomposition.checked);
    }
    report.count("decomposition_samples", checked);
    report.test("decomposition_exact", worst, worst <= 1e-9 && checked > 0,
                "max |S_{M_t} + A_t - X_t| over all grid samples, limit 1e-9");
  }

  std::vector<MeanSe> rem, gap;
  for (std::size_t k = 0; k < obs_times.size(); ++k) {
    std::vector<double> a, g;
    const double root_t = std::sqrt(obs_times[k]);
    for (const auto& r : runs) {
      const auto& s = r.snapshots[k];
      if (auto at = remainder(r.renewals, s.t, s.x)) a.push_back(std::fabs(*at) / root_t);
      g.push_back((s.x - s.r) / root_t);
    }
    rem.push_back(mean_se(a));
    gap.push_back(mean_se(g));
    const std::string tag = "_t" + detail::fmt(obs_times[k]);
    report.metric("abs_remainder_over_sqrt_t" + tag, rem.back().mean, rem.back().se);
    report.metric("gap_over_sqrt_t" + tag, gap.back().mean, gap.back().se);
  }
  report.test("remainder_decreasing", rem.back().mean, detail::decreasing_within_noise(rem),
              "mean |A_t|/sqrt(t) decreasing over t_max/4, t_max/2, t_max");
  report.test("gap_decreasing", gap.back().mean, detail::decreasing_within_noise(gap),
              "mean (X_t - R_t)/sqrt(t) decreasing over t_max/4, t_max/2, t_max");

  if (!runs.empty() && !runs[0].trajectory.samples.empty()) {
    if (auto f = detail::open_output(c, "trajectory.csv")) csv::write_trajectory(*f, runs[0].trajectory);
    if (auto f = detail::open_output(c, "jumps.csv")) csv::write_jumps(*f, runs[0].trajectory);
  }
  report.runtime_seconds = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// engines: cross-engine equivalence and step-size control

inline ExperimentReport run_engines(const ExperimentConfig& c) {
  detail::Stopwatch clock;
  validate_config(c);
  detail::require_at_least(c.replicas, kMinKsSample, "replicas");
  auto report = detail::start_report("engines", c);

  RatchetParams thin = c.params();
  thin.engine = Engine::thinning;
  RatchetParams graph = thin;
  graph.engine = Engine::graphical;
  graph.seed = c.seed + 1;
  const auto xt = detail::final_positions(thin, c.threads);
  const auto xg = detail::final_positions(graph, c.threads);
  const auto mt = mean_se(xt), mg = mean_se(xg);
  report.metric("mean_x_thinning", mt.mean, mt.se);
  report.metric("mean_x_graphical", mg.mean, mg.se);
  const auto ks = ks_two_sample(xt, xg);
  report.test("cross_engine_ks", ks.statistic, ks.p_value >= c.alpha,
              "two-sample KS of X_t, thinning vs graphical", ks.p_value);

  // The coarse run sums two normals per step, so it follows the fine path.
  RatchetParams coarse = c.params();
  coarse.engine = Engine::thinning;
  coarse.gamma = c.halving_gamma;
  coarse.t_max = c.halving_t_max;
  coarse.replicas = c.halving_replicas;
  RatchetParams fine = coarse;
  fine.dt = coarse.dt / 2.0;
  const auto pairs = parallel_map(coarse.replicas, c.threads, [&](std::uint64_t i) {
    std::array<double, 2> out{};
    FinalState a, b;
    ReplicaStreams ra(coarse.seed, i), rb(fine.seed, i);
    simulate_path(coarse, ra, a, {2});
    simulate_path(fine, rb, b, {1});
    out[0] = a.state.x / coarse.t_max;
    out[1] = b.state.x / fine.t_max;
    return out;
  });
  std::vector<double> vc, vf, diff;
  for (const auto& pr : pairs) {
    vc.push_back(pr[0]);
    vf.push_back(pr[1]);
    diff.push_back(pr[0] - pr[1]);
  }
  const auto sc = mean_se(vc), sf = mean_se(vf), sd = mean_se(diff);
  report.metric("speed_dt", sc.mean, sc.se);
  report.metric("speed_dt_half", sf.mean, sf.se);
  report.metric("speed_difference_paired", sd.mean, sd.se);
  const double pooled = std::hypot(sc.se, sf.se);
  report.test("dt_halving_within_pooled_se", std::fabs(sc.mean - sf.mean) / pooled,
              std::fabs(sc.mean - sf.mean) < pooled,
              "|speed(dt) - speed(dt/2)| / pooled stderr, limit 1");
  report.runtime_seconds = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// clt

struct CltReplica {
  double x = 0.0;
  std::vector<RenewalPoint> renewals;
};

inline std::vector<CltReplica> clt_ensemble(const RatchetParams& p, unsigned threads) {
  return parallel_map(p.replicas, threads, [&](std::uint64_t i) {
    FinalState f;
    RenewalTracker tracker;
    Tee tee(f, tracker);
    simulate(p, i, tee);
    return CltReplica{f.state.x, tracker.release()};
  });
}

inline std::vector<RenewalCycle> pooled_cycles(std::span<const CltReplica> runs,
                                               std::size_t from, std::size_t to) {
  std::vector<RenewalCycle> out;
  for (std::size_t i = from; i < to; ++i) {
    const auto cs = cycles_from_points(runs[i].renewals);
    out.insert(out.end(), cs.begin(), cs.end());
  }
  return out;
}

inline ExperimentReport run_clt(const ExperimentConfig& c) {
  detail::Stopwatch clock;
  validate_config(c);
  detail::require_at_least(c.replicas, kMinCltReplicas, "replicas");
  auto report = detail::start_report("clt", c);
  const auto consts = special::asymptotic_constants(c.gamma);
  report.analytic("speed_analytic", consts.speed);
  report.analytic("sigma_conjectured", consts.sigma_conjectured);
  constexpr double band_lo = 0.55, band_hi = 0.66;

  const RatchetParams p = c.params();
  const auto runs = clt_ensemble(p, c.threads);
  std::vector<double> x;
  for (const auto& r : runs) x.push_back(r.x);
  const auto check = clt_check(x, c.t_max, c.gamma);
  report.metric("sigma_ensemble", check.sigma_hat, check.sigma_se);
  report.metric("mean_offset", check.mean_offset, check.sigma_hat * std::sqrt(c.t_max / x.size()));
  report.test("normality_ks", check.ks_normal.statistic, check.ks_normal.p_value >= c.alpha,
              "KS of (X_t - C_gamma t)/(sigma_hat sqrt t) against N(0,1)",
              check.ks_normal.p_value);
  report.test("sigma_ensemble_in_band", check.sigma_hat,
              check.sigma_hat >= band_lo && check.sigma_hat <= band_hi,
              "ensemble sigma_hat within [0.55, 0.66]");

  const auto all = pooled_cycles(runs, 0, runs.size());
  const auto st = cycle_statistics(all);
  report.metric("sigma_renewal", st.sigma_hat, st.sigma_se);
  report.metric("speed_renewal", st.speed, st.speed_se);
  report.test("sigma_renewal_in_band", st.sigma_hat,
              st.sigma_hat >= band_lo && st.sigma_hat <= band_hi,
              "renewal sigma_hat within [0.55, 0.66]");

  // Second moments of the cycle increments: the two halves of the ensemble
  // must agree (no heavy-tailed blow-up when the ensemble doubles).
  const auto first = pooled_cycles(runs, 0, runs.size() / 2);
  const auto second = pooled_cycles(runs, runs.size() / 2, runs.size());
  auto moment = [](std::span<const RenewalCycle> cs, bool duration) {
    std::vector<double> sq;
    for (const auto& cy : cs) {
      const double v = duration ? cy.duration : cy.displacement;
      sq.push_back(v * v);
    }
    return mean_se(sq);
  };
  for (bool duration : {true, false}) {
    const auto a = moment(first, duration), b = moment(second, duration);
    const std::string name = duration ? "duration" : "displacement";
    report.metric(name + "_second_moment", moment(all, duration).mean,
                  moment(all, duration).se);
    const double z = std::fabs(a.mean - b.mean) / std::hypot(a.se, b.se);
    report.test(name + "_second_moment_stable", z, z <= 3.0,
                "halves of the ensemble agree within 3 pooled stderr");
  }

  struct Sigma {
    double gamma, value, se;
  };
  std::vector<Sigma> sigmas{{c.gamma, st.sigma_hat, st.sigma_se}};
  for (double g : c.compare_gammas) {
    RatchetParams q = p;
    q.gamma = g;
    q.replicas = c.compare_replicas;
    q.seed = c.seed + static_cast<std::uint64_t>(std::llround(1000.0 * g)) + 7;
    if (!validate(q).ok()) throw ConfigError("compare gamma " + detail::fmt(g) + " is invalid");
    const auto other = clt_ensemble(q, c.threads);
    const auto s = cycle_statistics(pooled_cycles(other, 0, other.size()));
    sigmas.push_back({g, s.sigma_hat, s.sigma_se});
    report.metric("sigma_renewal_gamma_" + detail::fmt(g), s.sigma_hat, s.sigma_se);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < sigmas.size(); ++i)
    for (std::size_t j = i + 1; j < sigmas.size(); ++j)
      worst = std::max(worst, std::fabs(sigmas[i].value - sigmas[j].value) /
                                  std::hypot(sigmas[i].se, sigmas[j].se));
  report.test("sigma_gamma_independent", worst, worst <= 3.0,
              "largest pairwise |sigma_a - sigma_b| / pooled stderr, limit 3");
  report.runtime_seconds = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// scaling

inline ExperimentReport run_scaling(const ExperimentConfig& c) {
  detail::Stopwatch clock;
  validate_config(c);
  detail::require_at_least(c.replicas, kMinKsSample, "replicas");
  auto report = detail::start_report("scaling", c);
  RatchetParams direct = c.params();
  RatchetParams unit = direct;
  unit.gamma = 1.0;
  unit.t_max = std::pow(c.gamma, 2.0 / 3.0) * c.t_max;
  unit.seed = c.seed + 1;
  const auto xg = detail::final_positions(direct, c.threads);
  const auto x1 = detail::final_positions(unit, c.threads);
  std::vector<double> mapped;
  for (double x : x1) mapped.push_back(rescale_state({unit.t_max, x, 0.0}, 1.0, c.gamma).x);
  const auto a = mean_se(xg), b = mean_se(mapped);
  report.metric("mean_x_direct", a.mean, a.se);
  report.metric("mean_x_rescaled", b.mean, b.se);
  report.analytic("unit_time", unit.t_max);
  const auto ks = ks_two_sample(xg, mapped);
  report.test("scaling_ks", ks.statistic, ks.p_value >= c.alpha,
              "two-sample KS of X_t^gamma against gamma^(-1/3) X^1 at gamma^(2/3) t",
              ks.p_value);
  report.runtime_seconds = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// invariant

inline ExperimentReport run_invariant(const ExperimentConfig& c) {
  detail::Stopwatch clock;
  validate_config(c);
  detail::require_at_least(c.samples, kMinKsSample, "samples");
  auto report = detail::start_report("invariant", c);
  const auto& o = special::airy_origin();
  const double mean_y = -3.0 * o.ai_prime;
  report.analytic("mean_y_analytic", mean_y);
  report.analytic("envelope_rate", invariant_envelope_rate());
  const double acceptance_exact = invariant_envelope_rate() / (3.0 * o.ai);
  report.analytic("acceptance_rate_analytic", acceptance_exact);

  RandomStream rng(c.seed, 0, Substream::aux);
  std::uint64_t proposals = 0;
  std::vector<double> draws;
  draws.reserve(c.samples);
  for (std::uint64_t i = 0; i < c.samples; ++i) draws.push_back(sample_invariant(rng, &proposals));
  const double acc = static_cast<double>(c.samples) / static_cast<double>(proposals);
  report.metric("acceptance_rate", acc,
                std::sqrt(acc * (1.0 - acc) / static_cast<double>(proposals)));
  report.test("acceptance_rate_pinned", std::fabs(acc - 0.684463), std::fabs(acc - 0.684463) <= 0.02,
              "acceptance rate within 0.02 of 0.684463");
  const auto md = mean_se(draws);
  report.metric("mean_y_draws", md.mean, md.se);
  report.test("draws_mean_within_3se", std::fabs(md.mean - mean_y) / md.se,
              std::fabs(md.mean - mean_y) <= 3.0 * md.se, "|mean - (-3Ai'(0))| / stderr, limit 3");
  const auto cdf = [](double z) { return special::invariant_cdf(z); };
  const auto ks_draws = ks_one_sample(draws, cdf);
  report.test("draws_ks", ks_draws.statistic, ks_draws.p_value >= c.alpha,
              "KS of invariant draws against the 3 Ai CDF", ks_draws.p_value);

  std::vector<double> pushed;
  pushed.reserve(draws.size());
  for (double y : draws) pushed.push_back(chain_step(y, rng).y);
  const auto ks_pushed = ks_one_sample(pushed, cdf);
  report.test("stationarity_ks", ks_pushed.statistic, ks_pushed.p_value >= c.alpha,
              "KS of one chain step from invariant draws against 3 Ai", ks_pushed.p_value);

  // Gaps at jumps harvested from the path engine, in gamma = 1/2 units.
  const RatchetParams p = c.params();
  const special::GammaUnits units(c.gamma);
  const auto harvest = parallel_map(c.replicas, c.threads, [&](std::uint64_t i) {
    JumpHarvester h(c.gamma, c.x0);
    simulate(p, i, h);
    return h.release();
  });
  std::vector<double> ys, etas;
  for (const auto& recs : harvest) {
    for (std::size_t k = c.burn_in; k < recs.size(); ++k) {
      etas.push_back(*recs[k].eta_sampled / units.time());
      if ((k - c.burn_in) % c.thin == 0) ys.push_back(recs[k].y / units.length());
    }
  }
  report.count("engine_gaps", static_cast<double>(ys.size()));
  if (ys.size() >= kMinKsSample) {
    const auto ks_engine = ks_one_sample(ys, cdf);
    report.test("engine_gaps_ks", ks_engine.statistic, ks_engine.p_value >= c.alpha,
                "KS of engine gaps at jumps (after burn-in, thinned) against 3 Ai",
                ks_engine.p_value);
  } else {
    report.test("engine_gaps_ks", 0.0, false, "fewer than 10 harvested gaps");
  }
  if (etas.size() >= kMinTailSample) {
    const auto fit = exp_tail_fit(etas);
    report.metric("eta_tail_rate", fit.rate, 0.0);
    report.test("eta_tail_loglinear", fit.r_squared, fit.r_squared >= 0.98,
                "R^2 of log survival of waiting times beyond the median, limit 0.98");
    const auto me = mean_se(etas);
    report.metric("mean_eta_engine", me.mean, me.se);
    report.analytic("mean_eta_stationary", 6.0 * o.ai);
  }
  report.runtime_seconds = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// chain

inline constexpr std::uint64_t kChainBurnIn = 1000;

inline ExperimentReport run_chain_experiment(const ExperimentConfig& c) {
  detail::Stopwatch clock;
  if (c.steps < 100) throw ConfigError("steps must be at least 100");
  if (!(c.gamma > 0.0)) throw ConfigError("gamma must be positive");
  auto report = detail::start_report("chain", c);
  const auto& o = special::airy_origin();
  const double c_half = special::asymptotic_constants(0.5).speed;
  report.analytic("speed_analytic_half", c_half);
  report.analytic("mean_y_analytic", -3.0 * o.ai_prime);
  report.analytic("mean_eta_analytic", 6.0 * o.ai);

  RandomStream rng(c.seed, 0, Substream::aux);
  auto chain = run_chain(c.steps + kChainBurnIn, c.x0, rng);
  chain.erase(chain.begin(), chain.begin() + kChainBurnIn);
  std::vector<double> w, eta, y;
  for (const auto& r : chain) {
    w.push_back(r.w);
    eta.push_back(r.eta_expected);
    y.push_back(r.y);
  }
  const auto sp = detail::batched_ratio(w, eta);
  const std::vector<double> ones(y.size(), 1.0);
  const auto my = detail::batched_ratio(y, ones);
  const auto me = detail::batched_ratio(eta, ones);
  report.metric("speed_chain_half", sp.mean, sp.se);
  report.metric("mean_y", my.mean, my.se);
  report.metric("mean_eta_expected", me.mean, me.se);
  const double factor = std::cbrt(2.0 * c.gamma);
  report.metric("speed_chain", sp.mean * factor, sp.se * factor);
  report.analytic("speed_analytic", special::asymptotic_constants(c.gamma).speed);
  auto within = [&](const char* name, double v, double target, double tol, const char* what) {
    const double d = std::fabs(v / target - 1.0);
    report.test(name, d, d <= tol, what);
  };
  within("speed_within_1pct", sp.mean, c_half, 0.01, "sum w / sum eta_expected against C_{1/2}, limit 1%");
  within("mean_y_within_1pct", my.mean, -3.0 * o.ai_prime, 0.01, "mean y against -3Ai'(0), limit 1%");
  within("mean_eta_within_1pct", me.mean, 6.0 * o.ai, 0.01, "mean eta_expected against 6Ai(0), limit 1%");
  if (auto f = detail::open_output(c, "chain.csv")) write_chain_csv(*f, chain);
  report.runtime_seconds = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// variant

inline ExperimentReport run_variant(const ExperimentConfig& c) {
  detail::Stopwatch clock;
  validate_config(c);
  auto report = detail::start_report("variant", c);

  // Atom at the pore.
  RatchetParams d = delta_params(c.gamma, c.t_max, c.dt, c.seed);
  d.replicas = c.replicas;
  struct DeltaObs {
    FinalState f;
    std::uint64_t jumps = 0, not_reset = 0;
    void on_sample(const RatchetState& s, bool g) { f.on_sample(s, g); }
    void on_jump(const JumpEvent& j) {
      ++jumps;
      if (j.r_post != j.x_pre) ++not_reset;
    }
  };
  const auto druns = parallel_map(d.replicas, c.threads, [&](std::uint64_t i) {
    DeltaObs o;
    simulate_variant(d, i, o);
    return o;
  });
  std::vector<double> v;
  double jumps = 0, not_reset = 0;
  for (const auto& r : druns) {
    v.push_back(r.f.state.x / c.t_max);
    jumps += static_cast<double>(r.jumps);
    not_reset += static_cast<double>(r.not_reset);
  }
  const double target = delta_ratchet_speed(c.gamma);
  report.analytic("delta_speed_analytic", target);
  report.analytic("delta_crossover_gamma", delta_crossover_gamma());
  const auto ds = mean_se(v);
  report.metric("delta_speed", ds.mean, ds.se);
  const double dd = std::fabs(ds.mean / target - 1.0);
  report.test("delta_speed_within_2pct", dd, dd <= 0.02, "relative deviation from sqrt(gamma/2), limit 0.02");
  report.test("delta_jumps_reset_gap", not_reset, not_reset == 0 && jumps > 0,
              "every jump sets R to X, so jump times are renewal points");

  const auto dj = delta_jump_position_check(c.gamma, c.samples, c.dt, c.seed + 11);
  report.metric("delta_jump_position_mean", dj.mean, dj.mean_se);
  report.analytic("delta_jump_position_mean_analytic", dj.expected_mean);
  report.test("delta_jump_position_ks", dj.ks.statistic, dj.ks.p_value >= c.alpha,
              "KS of gaps at jumps against Exp(sqrt(2 gamma))", dj.ks.p_value);

  // Dissociation model with no dissociation and binding above R is the base
  // ratchet.
  RatchetParams bound = c.params();
  bound.t_max = c.equiv_t_max;
  bound.replicas = c.equiv_replicas;
  bound.engine = Engine::thinning;
  bound.variant.kind = VariantKind::dissociation;
  bound.variant.dissociation_rate = 0.0;
  bound.variant.bind_above_boundary = true;
  RatchetParams base = bound;
  base.variant = {};
  base.seed = c.seed + 1;
  const auto xb = detail::final_positions(bound, c.threads);
  const auto xa = detail::final_positions(base, c.threads);
  const auto ks = ks_two_sample(xb, xa);
  report.test("dissociation_free_matches_base_ks", ks.statistic, ks.p_value >= c.alpha,
              "two-sample KS of X_t, bound-set model (rate 0, binding on [R,X]) vs base",
              ks.p_value);

  // Slow dissociation barely changes the speed.
  RatchetParams slow;
  slow.gamma = 1.0;
  slow.dt = c.dt;
  slow.t_max = c.regime_t_max;
  slow.replicas = c.regime_replicas;
  slow.seed = c.seed + 2;
  slow.variant.kind = VariantKind::dissociation;
  slow.variant.dissociation_rate = c.regime_dissociation;
  const auto xs = detail::final_positions(slow, c.threads);
  std::vector<double> vs;
  for (double x : xs) vs.push_back(x / slow.t_max);
  const auto ss = mean_se(vs);
  const double c1 = special::asymptotic_constants(1.0).speed;
  report.metric("slow_dissociation_speed", ss.mean, ss.se);
  const double sd = std::fabs(ss.mean / c1 - 1.0);
  report.test("slow_dissociation_within_5pct", sd, sd <= 0.05,
              "speed with dissociation rate 0.01 gamma^(2/3) against C_1, limit 5%");
  report.runtime_seconds = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// coupling

inline ExperimentReport run_coupling(const ExperimentConfig& c) {
  detail::Stopwatch clock;
  if (!(c.gamma > 0.0) || !(c.dt > 0.0) || !(c.t_max > c.dt) || c.replicas < 2)
    throw ConfigError("coupling: need gamma > 0, 0 < dt < t_max and replicas >= 2");
  auto report = detail::start_report("coupling", c);
  const CouplingParams cp{c.gamma, c.x0, c.s1, c.s2, c.t_max, c.dt};
  const auto results = parallel_map(c.replicas, c.threads, [&](std::uint64_t i) {
    RandomStream b(c.seed, i, Substream::brownian), f(c.seed, i, Substream::jumps),
        t(c.seed, i, Substream::touches);
    return coupling_experiment(cp, b, f, t);
  });
  std::vector<double> attempts, failed, times;
  std::uint64_t coupled = 0;
  for (const auto& r : results) {
    if (r.time) {
      ++coupled;
      times.push_back(*r.time);
    }
    attempts.push_back(static_cast<double>(r.attempts));
    failed.push_back(static_cast<double>(r.failed_attempts));
  }
  const auto ma = mean_se(attempts), mf = mean_se(failed), mt = mean_se(times);
  report.count("coupled", static_cast<double>(coupled));
  report.metric("mean_attempts", ma.mean, ma.se);
  report.metric("mean_failed_attempts", mf.mean, mf.se);
  report.metric("mean_coupling_time", mt.mean, mt.se);
  report.test("all_coupled", static_cast<double>(coupled), coupled == c.replicas,
              "every replica couples before t_max");
  report.test("attempts_geometric_bound", ma.mean, ma.mean <= 2.0 + 3.0 * ma.se,
              "mean attempts (failed ones plus the success) <= 2 + 3 stderr");
  report.runtime_seconds = clock.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// selftest

inline ExperimentReport run_selftest(const ExperimentConfig& c) {
  detail::Stopwatch clock;
  auto report = detail::start_report("selftest", c);
  namespace sp = special;
  using quadrature::integrate;
  const auto& o = sp::airy_origin();
  constexpr double pi = std::numbers::pi;

  double wr = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double x = 10.0 * i / 99.0;
    const auto a = sp::airy(x);
    wr = std::max(wr, std::fabs(a.bi_prime * a.ai - a.ai_prime * a.bi - 1.0 / pi));
  }
  report.test("wronskian", wr, wr <= 1e-10, "max |Bi' Ai - Ai' Bi - 1/pi| on 100 points of [0, 10]");

  double ai_int = 0.0;
  for (int k = 0; k < 40; ++k)
    ai_int += integrate([](double u) { return sp::airy_ai(u); }, k, k + 1.0, 1e-16, 1e-15);
  report.test("ai_integral", std::fabs(ai_int - 1.0 / 3.0), std::fabs(ai_int - 1.0 / 3.0) <= 1e-10,
              "|int_0^40 Ai - 1/3| (the tail beyond 40 is below 1e-75)");

  double worst_norm = 0.0;
  for (double x : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    double total = 0.0;
    for (double a = 0.0; a < x + 30.0; a += 1.0)
      total += integrate([x](double y) { return sp::killing_position_density(x, y); }, a, a + 1.0,
                         1e-14, 1e-13);
    worst_norm = std::max(worst_norm, std::fabs(total - 1.0));
  }
  report.test("killing_density_normalised", worst_norm, worst_norm <= 1e-6,
              "max |int y G(x,y) dy - 1| over x in {0, 0.5, 1, 2, 4}");

  const double c1 = sp::asymptotic_constants(1.0).speed;
  report.test("speed_gamma_1", std::fabs(c1 - 0.459248), std::fabs(c1 - 0.459248) <= 1e-6,
              "|C_1 - 0.459248|");
  const double c_half = sp::asymptotic_constants(0.5).speed;
  const double ratio = (-3.0 * o.ai_prime) / (6.0 * o.ai);
  report.test("speed_ratio_identity", std::fabs(c_half - ratio), std::fabs(c_half - ratio) <= 1e-10,
              "|C_{1/2} - (-3Ai'(0))/(6Ai(0))|");

  double avg = 0.0;
  for (int k = 0; k < 40; ++k)
    avg += integrate([](double x) { return sp::invariant_density(x) * sp::expected_jump_time(x); },
                     k, k + 1.0, 1e-14, 1e-13);
  report.test("stationary_mean_jump_time", std::fabs(avg - 6.0 * o.ai),
              std::fabs(avg - 6.0 * o.ai) <= 1e-6, "|int 3Ai(x) E_x[tau] dx - 6Ai(0)|");

  const double gi0 = sp::scorer_gi(0.0);
  report.test("scorer_at_origin", std::fabs(gi0 - o.ai / std::numbers::sqrt3),
              std::fabs(gi0 - o.ai / std::numbers::sqrt3) <= 1e-10, "|Gi(0) - Ai(0)/sqrt3|");

  double inv = 0.0;
  for (int k = 0; k < 40; ++k)
    inv += integrate([](double z) { return z * sp::invariant_density(z); }, k, k + 1.0, 1e-14, 1e-13);
  report.test("invariant_mean", std::fabs(inv + 3.0 * o.ai_prime),
              std::fabs(inv + 3.0 * o.ai_prime) <= 1e-10, "|int z 3Ai(z) dz + 3Ai'(0)|");
  report.runtime_seconds = clock.seconds();
  report.metric("runtime_seconds", report.runtime_seconds, 0.0);
  report.test("runtime_under_10s", report.runtime_seconds, report.runtime_seconds < 10.0,
              "identity suite wall time in seconds, limit 10");
  return report;
}

// ---------------------------------------------------------------------------
// Command table shared by the CLI and the acceptance suite

struct Command {
  const char* name;
  const char* help;
  ExperimentConfig defaults;
  ExperimentReport (*run)(const ExperimentConfig&);
  bool gamma_required = false;
};

namespace detail {
inline ExperimentConfig with(double gamma, double t_max, std::uint64_t replicas) {
  ExperimentConfig c;
  c.gamma = gamma;
  c.t_max = t_max;
  c.replicas = replicas;
  return c;
}
}  // namespace detail

inline const std::vector<Command>& commands() {
  static const std::vector<Command> table = [] {
    using detail::with;
    std::vector<Command> out;
    out.push_back({"speed", "law of large numbers: ensemble, renewal and jump-chain speed",
                   with(1.0, 1000.0, 200), run_speed, true});
    out.push_back({"clt", "central limit theorem and the diffusion constant",
                   with(1.0, 500.0, 2000), run_clt});
    out.push_back({"scaling", "Brownian rescaling between gamma and 1",
                   with(4.0, 50.0, 5000), run_scaling});
    out.push_back({"invariant", "invariant law of the gap at jumps",
                   with(0.5, 3000.0, 100), run_invariant});
    out.push_back({"chain", "exact jump chain at gamma = 1/2", with(0.5, 1000.0, 1),
                   run_chain_experiment});
    auto variant = with(2.0, 1000.0, 200);
    variant.samples = 10000;
    out.push_back({"variant", "atom at the pore, dissociation equivalence and regime",
                   variant, run_variant});
    out.push_back({"coupling", "coupling of two boundary points under one driving path",
                   with(0.5, 1e4, 1000), run_coupling});
    out.push_back({"engines", "thinning vs graphical engine, and dt halving",
                   with(0.5, 10.0, 5000), run_engines});
    out.push_back({"selftest", "analytic identities", with(1.0, 1.0, 1), run_selftest});
    return out;
  }();
  return table;
}

inline const Command& find_command(const std::string& name) {
  for (const auto& c : commands())
    if (name == c.name) return c;
  throw ConfigError("unknown command '" + name + "'");
}

}  // namespace ratchet::experiments
