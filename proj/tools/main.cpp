#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "obsyn/expr.hpp"
#include "obsyn/report.hpp"
#include "obsyn/selftest.hpp"

namespace {

int run_scenario_command(const std::string& command, const std::string& scenario_path,
                         const std::string& out_override) {
  try {
    obsyn::Scenario sc = obsyn::load_scenario(scenario_path);
    if (!out_override.empty()) sc.output_dir = out_override;
    return obsyn::run_command(command, sc, std::cout);
  } catch (const obsyn::expr::ParseError& e) {
    std::cout << R"({"error":{"type":"validation","message":")" << e.what() << "\"}}\n";
    return obsyn::kExitValidation;
  } catch (const obsyn::ValidationError& e) {
    std::cout << R"({"error":{"type":"validation","message":")" << e.what() << "\"}}\n";
    return obsyn::kExitValidation;
  } catch (const obsyn::SolverError& e) {
    std::cout << R"({"error":{"type":"non-convergence","message":")" << e.what() << "\"}}\n";
    return obsyn::kExitNonConvergence;
  } catch (const std::runtime_error& e) {
    std::cout << R"({"error":{"type":"numerical","message":")" << e.what() << "\"}}\n";
    return obsyn::kExitNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"observability-aware piecewise feedback synthesis"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir;
  const std::vector<std::string> commands = {"gramian", "synthesize", "baseline",
                                             "compare", "check-gradient"};
  const std::vector<std::string> descriptions = {
      "empirical observability Gramian under the initial gain",
      "piecewise gain synthesis with full artifacts",
      "constant-gain LQR baseline evaluation",
      "synthesis and baseline side by side",
      "analytic vs finite-difference gradient on the first segment"};
  for (std::size_t i = 0; i < commands.size(); ++i) {
    CLI::App* sub = app.add_subcommand(commands[i], descriptions[i]);
    sub->add_option("scenario", scenario_path, "scenario file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the scenario)");
  }
  app.add_subcommand("selftest", "run the built-in acceptance battery");

  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  if (name == "selftest") {
    bool ok = true;
    for (const auto& r : obsyn::run_acceptance()) {
      std::cout << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << " (" << r.name
                << "): " << r.detail << "\n";
      ok = ok && r.pass;
    }
    return ok ? obsyn::kExitOk : 1;
  }
  return run_scenario_command(name, scenario_path, out_dir);
}
