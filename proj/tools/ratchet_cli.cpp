// Command-line front end: one subcommand per experiment, a JSON report on
// stdout. Exit codes: 0 all tests passed, 2 configuration error, 3 a test
// failed, 1 anything else.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ratchet/experiments.hpp"

namespace {

using ratchet::ConfigError;
using ratchet::ExperimentConfig;
using ratchet::ExperimentReport;
namespace ex = ratchet::experiments;

constexpr int kExitConfig = 2;
constexpr int kExitTestFailure = 3;

struct Flags {
  std::optional<double> gamma, t_max, dt, x0, alpha, s1, s2;
  std::optional<std::uint64_t> replicas, seed, samples, steps, burn_in, thin;
  std::optional<unsigned> threads;
  std::optional<std::string> engine, out, config;
  bool no_decomposition = false;

  nlohmann::json overrides() const {
    nlohmann::json j = nlohmann::json::object();
    auto put = [&](const char* key, const auto& v) {
      if (v) j[key] = *v;
    };
    put("gamma", gamma);
    put("t_max", t_max);
    put("dt", dt);
    put("x0", x0);
    put("alpha", alpha);
    put("s1", s1);
    put("s2", s2);
    put("replicas", replicas);
    put("seed", seed);
    put("samples", samples);
    put("steps", steps);
    put("burn_in", burn_in);
    put("thin", thin);
    put("threads", threads);
    put("engine", engine);
    put("out", out);
    if (no_decomposition) j["decomposition"] = false;
    return j;
  }
};

void add_flags(CLI::App& sub, Flags& f) {
  sub.add_option("--gamma", f.gamma, "binding rate gamma");
  sub.add_option("--t-max,--t", f.t_max, "time horizon");
  sub.add_option("--dt", f.dt, "time step");
  sub.add_option("--x0", f.x0, "initial gap X_0 - R_0");
  sub.add_option("--replicas", f.replicas, "number of replicas");
  sub.add_option("--seed", f.seed, "master seed");
  sub.add_option("--engine", f.engine, "thinning or graphical");
  sub.add_option("--threads", f.threads, "worker threads (0: all cores)");
  sub.add_option("--out", f.out, "directory for CSV output");
  sub.add_option("--config", f.config, "flat JSON config; flags override it");
  sub.add_option("--alpha", f.alpha, "significance level of the KS tests");
  sub.add_option("--samples", f.samples, "draws for samplers and KS tests");
  sub.add_option("--steps", f.steps, "exact jump-chain steps");
  sub.add_option("--burn-in", f.burn_in, "jumps discarded per replica");
  sub.add_option("--thin", f.thin, "keep every n-th jump after burn-in");
  sub.add_option("--s1", f.s1, "first boundary point (coupling)");
  sub.add_option("--s2", f.s2, "second boundary point (coupling)");
  sub.add_flag("--no-decomposition", f.no_decomposition,
               "skip the per-sample decomposition check (speed)");
}

ExperimentConfig resolve(const ex::Command& cmd, const Flags& f) {
  ExperimentConfig c = cmd.defaults;
  bool gamma_given = f.gamma.has_value();
  if (f.config) {
    std::ifstream in(*f.config);
    if (!in) throw ConfigError("cannot read config file '" + *f.config + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    ratchet::apply_json(c, j);
    gamma_given = gamma_given || (j.is_object() && j.contains("gamma"));
  }
  ratchet::apply_json(c, f.overrides());
  if (cmd.gamma_required && !gamma_given)
    throw ConfigError(std::string(cmd.name) + ": --gamma is required");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Brownian ratchet simulator and validation experiments"};
  app.require_subcommand(1);
  Flags flags;
  std::map<const CLI::App*, const ex::Command*> lookup;
  for (const auto& cmd : ex::commands()) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    add_flags(*sub, flags);
    lookup[sub] = &cmd;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const ex::Command* cmd = lookup.at(app.get_subcommands().front());
  try {
    const ExperimentConfig config = resolve(*cmd, flags);
    const auto warnings = ratchet::validate(config.params()).warnings;
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    const ExperimentReport report = cmd->run(config);
    std::cout << ratchet::to_json(report).dump(2) << std::endl;
    return report.passed() ? 0 : kExitTestFailure;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
