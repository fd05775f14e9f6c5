// Acceptance suite: runs every criterion at its stated size and tolerance and
// prints one PASS/FAIL line per criterion. Set RATCHET_ACCEPTANCE_OUT to a
// directory to also keep the JSON reports.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ratchet/experiments.hpp"

namespace {

using ratchet::ExperimentConfig;
using ratchet::ExperimentReport;
namespace ex = ratchet::experiments;

struct Check {
  const ExperimentReport* report;
  std::string test;
  std::string label = {};
};

std::string number(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

ExperimentReport run(const std::string& command, ExperimentConfig c, const std::string& tag) {
  const auto& cmd = ex::find_command(command);
  std::cerr << "running " << tag << " ..." << std::endl;
  ExperimentReport r = cmd.run(c);
  std::cerr << "  done in " << r.runtime_seconds << " s" << std::endl;
  if (const char* dir = std::getenv("RATCHET_ACCEPTANCE_OUT")) {
    std::filesystem::create_directories(dir);
    std::ofstream(std::filesystem::path(dir) / (tag + ".json"))
        << ratchet::to_json(r).dump(2) << '\n';
  }
  return r;
}

ExperimentConfig defaults(const std::string& command) { return ex::find_command(command).defaults; }

bool criterion(int n, const std::string& title, const std::vector<Check>& checks) {
  bool ok = true;
  std::vector<std::string> lines;
  for (const auto& c : checks) {
    const auto it = c.report->tests.find(c.test);
    const bool found = it != c.report->tests.end();
    const bool pass = found && it->second.pass;
    ok = ok && pass;
    const std::string& source = c.label.empty() ? c.report->command : c.label;
    std::string line = "    " + source + "/" + c.test + ": ";
    if (!found) {
      line += "missing";
    } else {
      line += (pass ? "ok" : "FAILED");
      line += " statistic=" + number(it->second.statistic);
      if (it->second.p_value) line += " p=" + number(*it->second.p_value);
      line += " (" + it->second.detail + ")";
    }
    lines.push_back(line);
  }
  std::cout << "criterion " << n << " [" << title << "]: " << (ok ? "PASS" : "FAIL") << '\n';
  for (const auto& l : lines) std::cout << l << '\n';
  std::cout.flush();
  return ok;
}

}  // namespace

int main() {
  bool all = true;

  const auto identities = run("selftest", defaults("selftest"), "selftest");
  {
    std::vector<Check> cs;
    for (const auto& [name, _] : identities.tests) cs.push_back({&identities, name});
    all &= criterion(1, "analytic identities", cs);
  }

  auto speed_cfg = defaults("speed");
  const auto speed_thin = run("speed", speed_cfg, "speed_thinning");
  speed_cfg.engine = ratchet::Engine::graphical;
  speed_cfg.steps = 0;
  const auto speed_graph = run("speed", speed_cfg, "speed_graphical");
  all &= criterion(2, "law of large numbers",
                   {{&speed_thin, "ensemble_within_2pct", "speed[thinning]"},
                    {&speed_thin, "ensemble_within_3se", "speed[thinning]"},
                    {&speed_graph, "ensemble_within_2pct", "speed[graphical]"},
                    {&speed_graph, "ensemble_within_3se", "speed[graphical]"}});

  const auto chain = run("chain", defaults("chain"), "chain");
  all &= criterion(3, "jump-chain speed",
                   {{&chain, "speed_within_1pct"}, {&chain, "mean_y_within_1pct"}});

  const auto invariant = run("invariant", defaults("invariant"), "invariant");
  {
    const double harvested = invariant.metrics.at("engine_gaps").value;
    auto counted = invariant;
    counted.test("engine_gaps_at_least_1e4", harvested, harvested >= 1e4,
                 "engine-harvested gaps after burn-in, at least 1e4");
    all &= criterion(4, "invariant law",
                     {{&counted, "draws_ks"},
                      {&counted, "engine_gaps_ks"},
                      {&counted, "engine_gaps_at_least_1e4"}});
  }

  const auto clt = run("clt", defaults("clt"), "clt");
  all &= criterion(5, "central limit theorem",
                   {{&clt, "normality_ks"},
                    {&clt, "sigma_ensemble_in_band"},
                    {&clt, "sigma_renewal_in_band"},
                    {&clt, "sigma_gamma_independent"}});

  const auto scaling = run("scaling", defaults("scaling"), "scaling");
  all &= criterion(6, "Brownian scaling", {{&scaling, "scaling_ks"}});

  const auto engines = run("engines", defaults("engines"), "engines");
  all &= criterion(7, "engine equivalence",
                   {{&engines, "cross_engine_ks"}, {&engines, "dt_halving_within_pooled_se"}});

  const auto variant = run("variant", defaults("variant"), "variant");
  all &= criterion(8, "variants",
                   {{&variant, "delta_speed_within_2pct"},
                    {&variant, "delta_jump_position_ks"},
                    {&variant, "dissociation_free_matches_base_ks"}});

  const auto coupling = run("coupling", defaults("coupling"), "coupling");
  all &= criterion(9, "structure",
                   {{&speed_thin, "decomposition_exact", "speed[thinning]"},
                    {&speed_graph, "decomposition_exact", "speed[graphical]"},
                    {&speed_thin, "uniform_jump_ks"},
                    {&invariant, "eta_tail_loglinear"},
                    {&speed_thin, "remainder_decreasing"},
                    {&speed_thin, "gap_decreasing"},
                    {&coupling, "all_coupled"},
                    {&coupling, "attempts_geometric_bound"}});

  std::cout << (all ? "all criteria passed" : "some criteria FAILED") << '\n';
  return all ? EXIT_SUCCESS : EXIT_FAILURE;
}
