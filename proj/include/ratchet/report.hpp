#pragma once

// Experiment configuration (a flat key/value document) and the structured
// report every experiment returns.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ratchet/core.hpp"

namespace ratchet {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Raised for malformed or invalid configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  double gamma = 1.0;
  double t_max = 1000.0;
  double dt = 1e-3;
  double x0 = 0.0;
  std::uint64_t replicas = 200;
  std::uint64_t seed = 42;
  Engine engine = Engine::thinning;
  unsigned threads = 0;
  std::string out;

  double alpha = 0.01;
  /// Draws for samplers and KS tests.
  std::uint64_t samples = 100000;
  /// Exact jump-chain steps.
  std::uint64_t steps = 1000000;
  std::uint64_t burn_in = 100;
  std::uint64_t thin = 10;
  bool decomposition = true;

  std::vector<double> compare_gammas{0.5, 4.0};
  std::uint64_t compare_replicas = 500;

  double halving_gamma = 1.0;
  double halving_t_max = 1000.0;
  std::uint64_t halving_replicas = 200;

  double equiv_t_max = 10.0;
  std::uint64_t equiv_replicas = 2000;
  double regime_dissociation = 0.01;
  double regime_t_max = 200.0;
  std::uint64_t regime_replicas = 200;

  double s1 = 0.0;
  double s2 = 1.0;

  RatchetParams params() const {
    RatchetParams p;
    p.gamma = gamma;
    p.t_max = t_max;
    p.dt = dt;
    p.x0 = x0;
    p.engine = engine;
    p.seed = seed;
    p.replicas = replicas;
    return p;
  }
};

inline std::string engine_name(Engine e) {
  return e == Engine::graphical ? "graphical" : "thinning";
}

inline Engine parse_engine(const std::string& s) {
  if (s == "thinning") return Engine::thinning;
  if (s == "graphical") return Engine::graphical;
  throw ConfigError("engine must be 'thinning' or 'graphical', got '" + s + "'");
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"gamma", c.gamma},
          {"t_max", c.t_max},
          {"dt", c.dt},
          {"x0", c.x0},
          {"replicas", c.replicas},
          {"seed", c.seed},
          {"engine", engine_name(c.engine)},
          {"out", c.out},
          {"alpha", c.alpha},
          {"samples", c.samples},
          {"steps", c.steps},
          {"burn_in", c.burn_in},
          {"thin", c.thin},
          {"decomposition", c.decomposition},
          {"compare_gammas", c.compare_gammas},
          {"compare_replicas", c.compare_replicas},
          {"halving_gamma", c.halving_gamma},
          {"halving_t_max", c.halving_t_max},
          {"halving_replicas", c.halving_replicas},
          {"equiv_t_max", c.equiv_t_max},
          {"equiv_replicas", c.equiv_replicas},
          {"regime_dissociation", c.regime_dissociation},
          {"regime_t_max", c.regime_t_max},
          {"regime_replicas", c.regime_replicas},
          {"s1", c.s1},
          {"s2", c.s2}};
}

/// Applies the keys present in a flat JSON object; unknown keys and wrong
/// types are configuration errors. "threads" is accepted but never echoed,
/// since results do not depend on it.
inline void apply_json(ExperimentConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a flat JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "gamma") c.gamma = value.get<double>();
      else if (key == "t_max") c.t_max = value.get<double>();
      else if (key == "dt") c.dt = value.get<double>();
      else if (key == "x0") c.x0 = value.get<double>();
      else if (key == "replicas") c.replicas = value.get<std::uint64_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "engine") c.engine = parse_engine(value.get<std::string>());
      else if (key == "threads") c.threads = value.get<unsigned>();
      else if (key == "out") c.out = value.get<std::string>();
      else if (key == "alpha") c.alpha = value.get<double>();
      else if (key == "samples") c.samples = value.get<std::uint64_t>();
      else if (key == "steps") c.steps = value.get<std::uint64_t>();
      else if (key == "burn_in") c.burn_in = value.get<std::uint64_t>();
      else if (key == "thin") c.thin = value.get<std::uint64_t>();
      else if (key == "decomposition") c.decomposition = value.get<bool>();
      else if (key == "compare_gammas") c.compare_gammas = value.get<std::vector<double>>();
      else if (key == "compare_replicas") c.compare_replicas = value.get<std::uint64_t>();
      else if (key == "halving_gamma") c.halving_gamma = value.get<double>();
      else if (key == "halving_t_max") c.halving_t_max = value.get<double>();
      else if (key == "halving_replicas") c.halving_replicas = value.get<std::uint64_t>();
      else if (key == "equiv_t_max") c.equiv_t_max = value.get<double>();
      else if (key == "equiv_replicas") c.equiv_replicas = value.get<std::uint64_t>();
      else if (key == "regime_dissociation") c.regime_dissociation = value.get<double>();
      else if (key == "regime_t_max") c.regime_t_max = value.get<double>();
      else if (key == "regime_replicas") c.regime_replicas = value.get<std::uint64_t>();
      else if (key == "s1") c.s1 = value.get<double>();
      else if (key == "s2") c.s2 = value.get<double>();
      else throw ConfigError("config: unknown key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config: bad value for '" + key + "': " + e.what());
    }
  }
}

/// Checks shared by every command; command-specific limits live with the
/// experiments.
inline void validate_config(const ExperimentConfig& c) {
  const auto report = validate(c.params());
  if (!report.ok()) throw ConfigError(report.summary());
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (c.thin == 0) throw ConfigError("thin must be at least 1");
}

struct Metric {
  double value = 0.0;
  /// Absent for analytic values.
  std::optional<double> std_error;
  bool analytic = false;
};

struct TestOutcome {
  double statistic = 0.0;
  std::optional<double> p_value;
  bool pass = false;
  std::string detail;
};

struct ExperimentReport {
  std::string command;
  nlohmann::json params_echo;
  std::map<std::string, Metric> metrics;
  std::map<std::string, TestOutcome> tests;
  double runtime_seconds = 0.0;
  std::uint64_t seed = 0;
  std::string artifact_version = kArtifactVersion;

  void metric(const std::string& name, double value, double se) {
    metrics[name] = {value, se, false};
  }
  void analytic(const std::string& name, double value) {
    metrics[name] = {value, std::nullopt, true};
  }
  /// A plain count or diagnostic without sampling error attached.
  void count(const std::string& name, double value) {
    metrics[name] = {value, 0.0, false};
  }
  void test(const std::string& name, double statistic, bool pass,
            std::string detail, std::optional<double> p = std::nullopt) {
    tests[name] = {statistic, p, pass, std::move(detail)};
  }

  bool passed() const {
    for (const auto& [_, t] : tests)
      if (!t.pass) return false;
    return true;
  }
};

inline nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [name, m] : r.metrics) {
    nlohmann::json e{{"value", number_or_null(m.value)}};
    if (m.analytic)
      e["analytic"] = true;
    else
      e["stderr"] = number_or_null(m.std_error.value_or(0.0));
    metrics[name] = e;
  }
  nlohmann::json tests = nlohmann::json::object();
  for (const auto& [name, t] : r.tests) {
    tests[name] = {{"statistic", number_or_null(t.statistic)},
                   {"p_value", t.p_value ? number_or_null(*t.p_value) : nlohmann::json(nullptr)},
                   {"pass", t.pass},
                   {"detail", t.detail}};
  }
  return {{"command", r.command},
          {"params_echo", r.params_echo},
          {"metrics", metrics},
          {"tests", tests},
          {"pass", r.passed()},
          {"runtime_seconds", r.runtime_seconds},
          {"seed", r.seed},
          {"artifact_version", r.artifact_version}};
}

}  // namespace ratchet
