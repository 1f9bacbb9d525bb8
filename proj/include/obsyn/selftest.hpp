#ifndef OBSYN_SELFTEST_HPP
#define OBSYN_SELFTEST_HPP

#include <string>
#include <vector>

namespace obsyn {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Runs the full acceptance battery (ten criteria) and reports one
/// result per criterion. Shared between the CLI selftest subcommand and
/// the acceptance test binary.
std::vector<CriterionResult> run_acceptance();

}  // namespace obsyn

#endif
