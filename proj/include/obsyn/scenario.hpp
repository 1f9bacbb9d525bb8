#ifndef OBSYN_SCENARIO_HPP
#define OBSYN_SCENARIO_HPP

#include <optional>
#include <string>
#include <vector>

#include "obsyn/synthesis.hpp"

namespace obsyn {

/// A fully validated experiment description. The on-disk format is a flat
/// sectioned key = value text file; matrices are rows separated by ';'
/// with whitespace-separated entries, e.g. Q = 1 0; 0 1.
struct Scenario {
  int schema_version = 1;

  // system: builtin | lti | expression
  std::string system_type;
  std::string builtin_name;           // builtin
  Mat A, B, C;                        // lti
  int n = 0, p = 0, m = 0;            // expression
  std::vector<std::string> f0_exprs;
  std::vector<std::vector<std::string>> fi_exprs;
  std::vector<std::string> h_exprs;

  Vec x0;
  CostSpec cost;
  SegmentPlan plan;
  OptimizerConfig optimizer;
  IntegratorConfig integrator;
  std::optional<Mat> K0;
  std::string output_dir = "out";

  ControlAffineSystem build_system() const;
  void validate() const;
};

Scenario load_scenario(const std::string& path);
Scenario load_scenario_text(const std::string& text);

/// The planar holonomic system with bearing-only output y = x2/x1,
/// with analytic Jacobians.
ControlAffineSystem holonomic_bearing_system();

/// LTI system xdot = Ax + Bu, y = Cx as a control-affine model.
ControlAffineSystem lti_system(const Mat& A, const Mat& B, const Mat& C);

/// Control-affine system declared by expressions in x1..xn; Jacobians
/// come from symbolic differentiation.
ControlAffineSystem expression_system(int n, int p, int m,
                                      const std::vector<std::string>& f0,
                                      const std::vector<std::vector<std::string>>& fi,
                                      const std::vector<std::string>& h);

}  // namespace obsyn

#endif
