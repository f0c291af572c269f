// qdd.cpp - command-line driver: scatter | milne | solve | verify
//
// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qdd/config.hpp"
#include "qdd/errors.hpp"
#include "qdd/run.hpp"
#include "qdd/verify.hpp"

namespace {

// exit codes: 0 ok, 1 verification failure, 2 config/parse error,
// 3 solvability violation, 4 iteration non-convergence
constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSolvability = 3;
constexpr int kExitConvergence = 4;

void usage() {
  std::cout <<
      "usage: qdd <command> [options]\n"
      "\n"
      "commands:\n"
      "  scatter   tabulate T/R over (E, p_y) and check the scattering properties\n"
      "  milne     solve a half-space layer problem or the coupled interface problem\n"
      "  solve     run the hybrid drift-diffusion device solver\n"
      "  verify    run an invariant suite: physics|scattering|interface|milne|device|all\n"
      "\n"
      "options:\n"
      "  --config FILE     read `key = value` configuration\n"
      "  --set key=value   override one configuration key (repeatable)\n"
      "  -o, --output DIR  output directory (overrides output.dir and QDD_OUTPUT_DIR)\n"
      "  --suite NAME      suite name for `verify` (default: all)\n";
}

struct Cli {
  std::string command;
  std::string config_path;
  std::string output_dir;
  std::string suite = "all";
  std::vector<std::pair<std::string, std::string>> overrides;
};

Cli parse_cli(int argc, char** argv) {
  Cli cli;
  if (argc < 2) throw qdd::config_error("missing command; try `qdd --help`");
  cli.command = argv[1];
  for (int i = 2; i < argc; ++i) {
    const std::string arg = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) throw qdd::config_error("option " + arg + " needs an argument");
      return argv[++i];
    };
    if (arg == "--config") {
      cli.config_path = next();
    } else if (arg == "--set") {
      const std::string kv = next();
      const size_t eq = kv.find('=');
      if (eq == std::string::npos) {
        throw qdd::config_error("--set expects key=value, got '" + kv + "'");
      }
      cli.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    } else if (arg == "-o" || arg == "--output") {
      cli.output_dir = next();
    } else if (arg == "--suite") {
      cli.suite = next();
    } else if (arg == "--help" || arg == "-h") {
      cli.command = "help";
    } else {
      throw qdd::config_error("unknown option '" + arg + "'");
    }
  }
  return cli;
}

int run_verify(const std::string& suite, const std::string& dir) {
  const auto suites = qdd::verify_suites(suite);
  nlohmann::ordered_json report = nlohmann::ordered_json::array();
  bool all_ok = true;
  for (const auto& s : suites) {
    nlohmann::ordered_json js;
    js["suite"] = s.suite;
    js["passed"] = s.passed();
    js["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : s.checks) {
      std::printf("[%s] %-55s |value| = %-12.3e (tol %.1e)\n", c.passed ? "PASS" : "FAIL",
                  c.name.c_str(), std::abs(c.value), c.threshold);
      nlohmann::ordered_json jc;
      jc["name"] = c.name;
      jc["value"] = c.value;
      jc["threshold"] = c.threshold;
      jc["passed"] = c.passed;
      js["checks"].push_back(jc);
      all_ok = all_ok && c.passed;
    }
    std::printf("suite %-12s %s\n", s.suite.c_str(), s.passed() ? "PASSED" : "FAILED");
    report.push_back(js);
  }
  if (!dir.empty()) {
    qdd::ensure_dir(dir);
    std::ofstream out(dir + "/verify_report.json");
    out << report.dump(2) << "\n";
  }
  return all_ok ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  Cli cli;
  qdd::RunConfig run;
  try {
    cli = parse_cli(argc, argv);
    if (cli.command == "help") {
      usage();
      return kExitOk;
    }

    qdd::Config cfg;
    if (!cli.config_path.empty()) cfg = qdd::Config::parse_file(cli.config_path);
    for (const auto& [k, v] : cli.overrides) cfg.set(k, v);
    run = qdd::RunConfig::from(cfg);

    // output directory precedence: flag > env > config
    if (cli.output_dir.empty()) {
      if (const char* env = std::getenv("QDD_OUTPUT_DIR")) cli.output_dir = env;
    }
    if (cli.output_dir.empty()) cli.output_dir = run.output_dir;
  } catch (const qdd::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (cli.command == "scatter") {
      const auto rep = qdd::run_scatter(run, cli.output_dir);
      std::cout << rep.summary() << "\n";
      return rep.passed ? kExitOk : kExitCheckFailed;
    }
    if (cli.command == "milne") {
      qdd::run_milne(run, cli.output_dir);
      std::cout << "milne outputs written to " << cli.output_dir << "\n";
      return kExitOk;
    }
    if (cli.command == "solve") {
      const auto o = qdd::run_solve(run, cli.output_dir);
      std::cout << "converged in " << o.outer_iterations
                << " outer iterations; terminal currents " << o.terminal_current_left << " / "
                << o.terminal_current_right << "; outputs in " << cli.output_dir << "\n";
      return kExitOk;
    }
    if (cli.command == "verify") {
      return run_verify(cli.suite, cli.output_dir);
    }
    std::cerr << "unknown command '" << cli.command << "'\n";
    usage();
    return kExitConfig;
  } catch (const qdd::solvability_error& e) {
    std::cerr << "solvability error: " << e.what() << "\n";
    return kExitSolvability;
  } catch (const qdd::convergence_error& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const qdd::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
}
