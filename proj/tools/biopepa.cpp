#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "biopepa/cli.hpp"
#include "biopepa/error.hpp"

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bio-PEPA model checker and simulator"};
  app.require_subcommand(1);

  std::string check_file;
  auto* check = app.add_subcommand("check", "Run static analysis and print diagnostics");
  check->add_option("FILE", check_file, "Model file")->required();

  biopepa::RunConfig config;
  std::string method = "ode-dopri";
  std::string species;
  std::vector<std::string> sets;
  auto* sim = app.add_subcommand("simulate", "Simulate a model and write CSV");
  sim->add_option("FILE", config.input, "Model file")->required();
  sim->add_option("--method", method, "ode-rk4, ode-dopri, ssa, nrm or tau")
      ->capture_default_str()
      ->check(CLI::IsMember({"ode-rk4", "ode-dopri", "ssa", "nrm", "tau"}));
  sim->add_option("--stop", config.stop, "Stop time")->required();
  sim->add_option("--points", config.points, "Number of grid points")->required();
  sim->add_option("--runs", config.runs, "Stochastic runs")->capture_default_str();
  sim->add_option("--seed", config.seed, "Master seed")->capture_default_str();
  sim->add_option("--step", config.step, "RK4 step size")->capture_default_str();
  sim->add_option("--rtol", config.rtol, "Dormand-Prince relative tolerance")
      ->capture_default_str();
  sim->add_option("--atol", config.atol, "Dormand-Prince absolute tolerance")
      ->capture_default_str();
  sim->add_option("--tau", config.tau, "Tau-leap step")->capture_default_str();
  sim->add_option("--set", sets, "Parameter override NAME=VALUE (repeatable)");
  sim->add_option("--species", species, "Comma list of name@location or observable names");
  sim->add_option("--out", config.output, "Output file (default: standard output)");
  sim->add_option("--threads", config.threads, "Worker threads for ensembles (0: all cores)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*check) return biopepa::cmd_check(check_file, std::cerr);

  try {
    config.method = *biopepa::parse_method(method);
    config.selection = split_list(species);
    for (const auto& s : sets) config.overrides.push_back(biopepa::parse_override(s));
  } catch (const biopepa::Error& e) {
    std::cerr << "error " << biopepa::code_name(e.code()) << ": " << e.what() << '\n';
    return 2;
  }
  return biopepa::cmd_simulate(config, std::cout, std::cerr);
}
