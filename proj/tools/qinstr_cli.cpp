// qinstr: regenerate figure data for the loss-detection instrument.
//
// Exit codes: 0 success, 2 configuration error, 3 solver non-convergence in a row.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "scenarios.hpp"

#ifndef QINSTR_GIT_DESCRIBE
#define QINSTR_GIT_DESCRIBE "unknown"
#endif

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw qinstr::cli::ConfigError("cannot open config file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw qinstr::cli::ConfigError("config file '" + path + "': " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-instrument toolkit: tomography, noise fits and loss-QEC scenarios"};
  std::string scenario, config_path, out_path;
  std::uint64_t seed = 1;
  std::int64_t trials = 0, shots = 0;
  bool list = false;

  std::vector<std::string> names;
  for (const auto& [name, fn] : qinstr::cli::registry()) names.push_back(name);

  app.add_option("--scenario", scenario, "scenario to run")->check(CLI::IsMember(names));
  app.add_option("--config", config_path, "JSON file with scenario parameters");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out_path, "output file (default: stdout)");
  app.add_option("--trials", trials, "override Monte Carlo trials per point")->check(CLI::PositiveNumber);
  app.add_option("--shots", shots, "override shots per tomography setting")->check(CLI::PositiveNumber);
  app.add_flag("--list", list, "list scenarios and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (list) {
    for (const auto& n : names) std::cout << n << '\n';
    return 0;
  }
  if (scenario.empty()) {
    std::cerr << "error: --scenario is required\n";
    return kExitConfig;
  }

  try {
    qinstr::cli::ScenarioConfig cfg;
    cfg.scenario = scenario;
    cfg.params = load_config(config_path);
    cfg.seed = seed;
    if (trials > 0) cfg.trials = trials;
    if (shots > 0) cfg.shots = shots;
    cfg.build = QINSTR_GIT_DESCRIBE;

    std::ostringstream buffer;
    const auto result = qinstr::cli::run_scenario(cfg, buffer);
    if (out_path.empty()) {
      std::cout << buffer.str();
    } else {
      std::ofstream out(out_path);
      if (!out) throw qinstr::cli::ConfigError("cannot open output file '" + out_path + "'");
      out << buffer.str();
    }
    if (result.solver_failure) {
      std::cerr << "warning: solver did not converge for at least one row\n";
      return kExitSolver;
    }
  } catch (const qinstr::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const qinstr::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitSolver;
  }
  return 0;
}
