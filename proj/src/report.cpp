#include "obsyn/report.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "obsyn/selftest.hpp"

namespace obsyn {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

json matrix_json(const Mat& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json manifest_json(const Scenario& sc, const std::string& command) {
  json j;
  j["schema_version"] = sc.schema_version;
  j["command"] = command;
  json sys;
  sys["type"] = sc.system_type;
  if (sc.system_type == "builtin") sys["name"] = sc.builtin_name;
  if (sc.system_type == "lti") {
    sys["A"] = matrix_json(sc.A);
    sys["B"] = matrix_json(sc.B);
    sys["C"] = matrix_json(sc.C);
  }
  if (sc.system_type == "expression") {
    sys["n"] = sc.n;
    sys["p"] = sc.p;
    sys["m"] = sc.m;
    sys["f0"] = sc.f0_exprs;
    for (std::size_t i = 0; i < sc.fi_exprs.size(); ++i)
      sys["f" + std::to_string(i + 1)] = sc.fi_exprs[i];
    sys["h"] = sc.h_exprs;
  }
  j["system"] = sys;
  j["initial"]["x0"] = vector_json(sc.x0);
  j["cost"] = {{"Q", matrix_json(sc.cost.Q)},
               {"R", matrix_json(sc.cost.R)},
               {"Qf", matrix_json(sc.cost.Qf)},
               {"epsilon", sc.cost.epsilon},
               {"zeta_policy", sc.cost.zeta.kind == ZetaPolicy::Kind::Fixed ? "fixed" : "decay"},
               {"zeta_value", sc.cost.zeta.value},
               {"t_f", sc.cost.t_f}};
  j["plan"]["boundaries"] = sc.plan.boundaries;
  j["optimizer"] = {{"mu0", sc.optimizer.mu0},
                    {"grad_tol", sc.optimizer.grad_tol},
                    {"max_iters", sc.optimizer.max_iters},
                    {"psd_tol", sc.optimizer.psd_tol}};
  if (sc.K0) j["optimizer"]["K0"] = matrix_json(*sc.K0);
  j["integrator"]["dt"] = sc.integrator.dt;
  j["output"]["dir"] = sc.output_dir;
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

struct Series {
  std::string name;
  std::vector<double> xs, ys;
};

// Minimal static line chart; no external assets.
void write_svg(const fs::path& path, const std::string& title, const std::string& xlabel,
               const std::string& ylabel, const std::vector<Series>& series) {
  const double W = 640, H = 480, ml = 60, mr = 20, mt = 40, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (double v : s.xs) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
    for (double v : s.ys) { ymin = std::min(ymin, v); ymax = std::max(ymax, v); }
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  const double xpad = 0.05 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
  xmin -= xpad; xmax += xpad; ymin -= ypad; ymax += ypad;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
      << title << "</text>\n"
      << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
      << H - mb << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + xpad + k * (xmax - xmin - 2 * xpad) / 4;
    const double yv = ymin + ypad + k * (ymax - ymin - 2 * ypad) / 4;
    out << "<text x=\"" << px(xv) << "\" y=\"" << H - mb + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << num(xv) << "</text>\n"
        << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << num(yv) << "</text>\n";
  }
  out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 10
      << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel << "</text>\n"
      << "<text x=\"16\" y=\"" << (mt + H - mb) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
      << (mt + H - mb) / 2 << ")\">" << ylabel << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill=\"none\" stroke=\"" << colors[s % 4]
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < series[s].xs.size(); ++k) {
      if (k % 4 == 0 || k + 1 == series[s].xs.size())  // thin dense grids
        out << num(px(series[s].xs[k])) << "," << num(py(series[s].ys[k])) << " ";
    }
    out << "\"/>\n";
    out << "<text x=\"" << W - mr - 10 << "\" y=\"" << mt + 18 * (s + 1)
        << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << colors[s % 4] << "\">"
        << series[s].name << "</text>\n";
  }
  out << "</svg>\n";
}

void write_state_csv(const fs::path& path, const std::vector<std::string>& labels,
                     const std::vector<const Trajectory*>& trajs, bool controls) {
  std::ofstream out(path);
  out << "t";
  for (std::size_t c = 0; c < trajs.size(); ++c) {
    const Eigen::Index dim = controls ? (*trajs[c]->controls)[0].size()
                                      : trajs[c]->states[0].size();
    for (Eigen::Index i = 0; i < dim; ++i)
      out << "," << labels[c] << (controls ? "_u" : "_x") << i + 1;
  }
  out << "\n";
  const std::size_t npts = trajs[0]->size();
  for (std::size_t k = 0; k < npts; ++k) {
    out << num(trajs[0]->times[k]);
    for (const auto* tr : trajs) {
      const Vec& v = controls ? (*tr->controls)[k] : tr->states[k];
      for (Eigen::Index i = 0; i < v.size(); ++i) out << "," << num(v[i]);
    }
    out << "\n";
  }
}

json result_summary(const SynthesisResult& r) {
  json j;
  j["total_cost"] = r.total_cost;
  j["l1_integral"] = r.total_l1_integral;
  j["l2_integral"] = r.total_l2_integral;
  j["l2_unsaturated_integral"] = r.total_l2_unsat;
  j["final_state"] = vector_json(r.trajectory.states.back());
  json segs = json::array();
  for (std::size_t s = 0; s < r.per_segment.size(); ++s) {
    const auto& seg = r.per_segment[s];
    segs.push_back({{"segment", s},
                    {"t_begin", r.gains[s].t_begin},
                    {"t_end", r.gains[s].t_end},
                    {"K", matrix_json(r.gains[s].K)},
                    {"J", seg.J},
                    {"zeta", seg.zeta},
                    {"iterations", seg.iterations},
                    {"status", seg.status == TerminationStatus::Converged
                                   ? "converged"
                                   : "iteration-capped"}});
  }
  j["segments"] = segs;
  return j;
}

json gramian_summary(const GramianResult& g) {
  const Vec sv = g.singular_values();
  return {{"W", matrix_json(g.W)},
          {"trace_index", g.trace_index},
          {"epsilon", g.epsilon},
          {"horizon", g.horizon},
          {"singular_values", vector_json(sv)},
          {"sigma_ratio", sv[sv.size() - 1] / sv[0]},
          {"min_eigenvalue", g.min_eigenvalue()},
          {"determinant", g.determinant()}};
}

Mat initial_gain(const ControlAffineSystem& sys, const Scenario& sc) {
  if (sc.K0) return *sc.K0;
  Mat A = sys.drift_jacobian(sc.x0);
  Mat B(sys.n(), sys.p());
  for (int i = 0; i < sys.p(); ++i) B.col(i) = sys.control_field(i, sc.x0);
  return lqr_gain(A, B, sc.cost.Q, sc.cost.R).K;
}

GramianResult gramian_for(const ControlAffineSystem& sys, const Scenario& sc,
                          const std::vector<GainMatrix>& gains, double horizon) {
  return empirical_gramian(sys, control_from_piecewise(gains), sc.x0, sc.cost.epsilon,
                           horizon, sc.integrator);
}

int cmd_gramian(const Scenario& sc, const fs::path& dir, std::ostream& log) {
  const ControlAffineSystem sys = sc.build_system();
  const Mat K = initial_gain(sys, sc);
  const GramianResult g = empirical_gramian(sys, control_from_gain(K), sc.x0,
                                            sc.cost.epsilon, sc.cost.t_f, sc.integrator);
  json j;
  j["gain"] = matrix_json(K);
  j["gramian"] = gramian_summary(g);
  write_json(dir / "summary.json", j);
  log << "trace index " << g.trace_index << ", written to " << (dir / "summary.json").string()
      << "\n";
  return kExitOk;
}

int cmd_baseline(const Scenario& sc, const fs::path& dir, std::ostream& log) {
  const ControlAffineSystem sys = sc.build_system();
  const Mat K = initial_gain(sys, sc);
  const SynthesisResult r = evaluate_piecewise(sys, sc.cost, sc.plan, sc.integrator, sc.x0, K);
  write_state_csv(dir / "trajectory.csv", {"lqr"}, {&r.trajectory}, false);
  write_state_csv(dir / "controls.csv", {"lqr"}, {&r.trajectory}, true);
  json j;
  j["baseline"] = result_summary(r);
  j["baseline"]["gain"] = matrix_json(K);
  write_json(dir / "summary.json", j);
  log << "baseline cost " << r.total_cost << "\n";
  return kExitOk;
}

int write_run_outputs(const Scenario& sc, const ControlAffineSystem& sys,
                      const SynthesisResult& syn, const SynthesisResult* base,
                      const fs::path& dir, std::ostream& log) {
  std::vector<std::string> labels = {"obs"};
  std::vector<const Trajectory*> trajs = {&syn.trajectory};
  if (base != nullptr) {
    labels.push_back("lqr");
    trajs.push_back(&base->trajectory);
  }
  write_state_csv(dir / "trajectory.csv", labels, trajs, false);
  write_state_csv(dir / "controls.csv", labels, trajs, true);

  json j;
  j["synthesized"] = result_summary(syn);
  const double gram_horizon = std::min(5.0, sc.cost.t_f);
  j["synthesized"]["gramian"] = gramian_summary(gramian_for(sys, sc, syn.gains, gram_horizon));
  const LyapunovTrace lyap = lyapunov_trace(syn, sc.cost, sc.plan);
  j["synthesized"]["lyapunov_nonincreasing"] = lyap.nonincreasing;
  j["synthesized"]["decay_rate_estimate"] =
      decay_rate_estimate(syn.trajectory, sc.cost.Q, sc.plan.boundaries);
  if (base != nullptr) {
    j["baseline"] = result_summary(*base);
    j["baseline"]["gramian"] = gramian_summary(gramian_for(sys, sc, base->gains, gram_horizon));
  }
  write_json(dir / "summary.json", j);

  std::vector<Series> phase;
  for (std::size_t c = 0; c < trajs.size(); ++c) {
    Series s;
    s.name = labels[c];
    for (std::size_t k = 0; k < trajs[c]->size(); ++k) {
      s.xs.push_back(trajs[c]->states[k][0]);
      s.ys.push_back(trajs[c]->states[k][trajs[c]->states[k].size() > 1 ? 1 : 0]);
    }
    phase.push_back(std::move(s));
  }
  write_svg(dir / "trajectories.svg", "Closed-loop trajectories", "x1",
            sys.n() > 1 ? "x2" : "x1", phase);

  std::vector<Series> ctrl;
  for (std::size_t c = 0; c < trajs.size(); ++c) {
    for (int i = 0; i < sys.p(); ++i) {
      Series s;
      s.name = labels[c] + " u" + std::to_string(i + 1);
      for (std::size_t k = 0; k < trajs[c]->size(); ++k) {
        s.xs.push_back(trajs[c]->times[k]);
        s.ys.push_back((*trajs[c]->controls)[k][i]);
      }
      ctrl.push_back(std::move(s));
    }
  }
  write_svg(dir / "controls.svg", "Controls", "t", "u", ctrl);

  log << "synthesized cost " << syn.total_cost;
  if (base != nullptr) log << " (baseline " << base->total_cost << ")";
  log << ", outputs in " << dir.string() << "\n";
  return kExitOk;
}

int cmd_synthesize(const Scenario& sc, const fs::path& dir, std::ostream& log) {
  const ControlAffineSystem sys = sc.build_system();
  const SynthesisResult syn =
      synthesize(sys, sc.cost, sc.plan, sc.optimizer, sc.integrator, sc.x0, sc.K0);
  return write_run_outputs(sc, sys, syn, nullptr, dir, log);
}

int cmd_compare(const Scenario& sc, const fs::path& dir, std::ostream& log) {
  const ControlAffineSystem sys = sc.build_system();
  const SynthesisResult syn =
      synthesize(sys, sc.cost, sc.plan, sc.optimizer, sc.integrator, sc.x0, sc.K0);
  const Mat K = initial_gain(sys, sc);
  const SynthesisResult base =
      evaluate_piecewise(sys, sc.cost, sc.plan, sc.integrator, sc.x0, K);
  return write_run_outputs(sc, sys, syn, &base, dir, log);
}

int cmd_check_gradient(const Scenario& sc, const fs::path& dir, std::ostream& log) {
  const ControlAffineSystem sys = sc.build_system();
  const Mat K = initial_gain(sys, sc);
  const double t0 = sc.plan.boundaries[0], t1 = sc.plan.boundaries[1];
  const AugmentedState z0 = AugmentedState::seed(sc.x0, sc.cost.epsilon, sc.cost.Qf);
  const Vec g = gradient(sys, sc.cost, K, t0, t1, z0, sc.integrator);
  json deltas = json::array();
  double worst = 0.0;
  for (double delta : {1e-4, 1e-5}) {
    const Vec fd = fd_gradient(sys, sc.cost, K, t0, t1, z0, sc.integrator, delta);
    const double rel = (g - fd).norm() / std::max(1.0, fd.norm());
    worst = std::max(worst, rel);
    deltas.push_back({{"delta", delta}, {"relative_error", rel}});
  }
  json j;
  j["gain"] = matrix_json(K);
  j["gradient"] = vector_json(g);
  j["finite_difference"] = deltas;
  j["max_relative_error"] = worst;
  write_json(dir / "summary.json", j);
  log << "max relative gradient error " << worst << "\n";
  return kExitOk;
}

}  // namespace

int run_command(const std::string& command, const Scenario& sc, std::ostream& log) {
  try {
    const fs::path dir(sc.output_dir);
    fs::create_directories(dir);
    write_json(dir / "manifest.json", manifest_json(sc, command));

    if (command == "gramian") return cmd_gramian(sc, dir, log);
    if (command == "synthesize") return cmd_synthesize(sc, dir, log);
    if (command == "baseline") return cmd_baseline(sc, dir, log);
    if (command == "compare") return cmd_compare(sc, dir, log);
    if (command == "check-gradient") return cmd_check_gradient(sc, dir, log);
    if (command == "selftest") {
      const auto results = run_acceptance();
      bool ok = true;
      for (const auto& r : results) {
        log << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << " (" << r.name
            << "): " << r.detail << "\n";
        ok = ok && r.pass;
      }
      return ok ? kExitOk : 1;
    }
    throw ValidationError("unknown command: " + command);
  } catch (const ValidationError& e) {
    log << json{{"error", {{"type", "validation"}, {"message", e.what()}}}}.dump() << "\n";
    return kExitValidation;
  } catch (const SolverError& e) {
    log << json{{"error", {{"type", "non-convergence"}, {"message", e.what()}}}}.dump() << "\n";
    return kExitNonConvergence;
  } catch (const std::runtime_error& e) {
    log << json{{"error", {{"type", "numerical"}, {"message", e.what()}}}}.dump() << "\n";
    return kExitNumerical;
  }
}

}  // namespace obsyn
