#ifndef OBSYN_REPORT_HPP
#define OBSYN_REPORT_HPP

#include <iosfwd>
#include <string>

#include "obsyn/scenario.hpp"

namespace obsyn {

// CLI exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitNonConvergence = 4;

/// Executes one subcommand against a loaded scenario, writing artifacts
/// into the scenario's output directory plus a manifest.json that records
/// every resolved parameter. Returns the process exit code; failures are
/// reported as machine-readable JSON on `log`.
int run_command(const std::string& command, const Scenario& scenario, std::ostream& log);

}  // namespace obsyn

#endif
