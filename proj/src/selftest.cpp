#include "obsyn/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "obsyn/expr.hpp"
#include "obsyn/scenario.hpp"
#include "obsyn/synthesis.hpp"

namespace obsyn {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

CriterionResult guard(int id, const std::string& name,
                      const std::function<CriterionResult()>& body) {
  try {
    CriterionResult r = body();
    r.id = id;
    r.name = name;
    return r;
  } catch (const std::exception& e) {
    return {id, name, false, std::string("exception: ") + e.what()};
  }
}

Mat mat(std::initializer_list<std::initializer_list<double>> rows) {
  Mat M(rows.size(), rows.begin()->size());
  int i = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (double v : row) M(i, j++) = v;
    ++i;
  }
  return M;
}

Vec vec(std::initializer_list<double> vals) {
  Vec v(vals.size());
  int i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

CostSpec quadratic_spec(int n, const ZetaPolicy& zeta, double t_f,
                        double eps = 0.01) {
  CostSpec spec;
  spec.Q = Mat::Identity(n, n);
  spec.R = Mat::Identity(n, n);
  spec.Qf = 0.1 * Mat::Identity(n, n);
  spec.epsilon = eps;
  spec.zeta = zeta;
  spec.t_f = t_f;
  return spec;
}

// --- criterion 1 -----------------------------------------------------------

CriterionResult crit_gramian_oracle() {
  struct Case {
    Mat A, B, C, K;
    double t_f;
  };
  const std::vector<Case> cases = {
      {mat({{-1.0}}), mat({{0.0}}), mat({{1.0}}), mat({{0.0}}), 2.0},
      {mat({{0, 1}, {0, 0}}), mat({{0}, {1}}), mat({{1, 0}}), mat({{-1, -2}}), 3.0},
      {mat({{-1.0, 0.2, 0.0}, {-0.3, -2.0, 0.1}, {0.0, 0.5, -1.5}}),
       mat({{0.5}, {1.0}, {-0.2}}), mat({{1.0, 0.3, -0.4}}),
       mat({{0.1, -0.2, 0.05}}), 3.0}};
  const IntegratorConfig cfg{2e-4};
  double worst = 0.0;
  for (const auto& cs : cases) {
    const ControlAffineSystem sys = lti_system(cs.A, cs.B, cs.C);
    const Mat W_exact = linear_gramian(cs.A + cs.B * cs.K, cs.C, cs.t_f);
    for (double eps : {1e-3, 1e-2, 1e-1}) {
      const GramianResult g = empirical_gramian(
          sys, control_from_gain(cs.K), Vec::Zero(cs.A.rows()), eps, cs.t_f, cfg);
      worst = std::max(worst, (g.W - W_exact).norm() / W_exact.norm());
    }
  }
  return {0, "", worst <= 1e-6, fmt("max relative error %.3g (tol 1e-6)", worst)};
}

// --- criterion 2 -----------------------------------------------------------

CriterionResult crit_scalar_trace() {
  const ControlAffineSystem sys = lti_system(mat({{-1.0}}), mat({{0.0}}), mat({{1.0}}));
  const GramianResult g = empirical_gramian(sys, control_from_gain(mat({{0.0}})),
                                            vec({0.0}), 1e-2, 1.0, IntegratorConfig{1e-4});
  const double exact = (1.0 - std::exp(-2.0)) / 2.0;
  const double err = std::abs(g.trace_index - exact);
  return {0, "", err <= 1e-8, fmt("|trace - (1-e^-2)/2| = %.3g (tol 1e-8)", err)};
}

// --- criterion 3 -----------------------------------------------------------

CriterionResult crit_lqr_unobservable() {
  const ControlAffineSystem sys = holonomic_bearing_system();
  const Mat K = -Mat::Identity(2, 2);
  const Vec x0 = vec({-1.0, 2.0});
  const IntegratorConfig cfg{1e-3};
  const Trajectory traj = integrate(
      [&](double, const Vec& x) { return eval_closed_loop(sys, x, K); }, x0, 0.0, 5.0, cfg);

  double max_det = 0.0;
  for (const Vec& x : traj.states) max_det = std::max(max_det, std::abs(bearing_obs_det(x, K * x)));

  double max_ydot = 0.0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double y0 = eval_output(sys, traj.states[k])[0];
    const double y1 = eval_output(sys, traj.states[k + 1])[0];
    max_ydot = std::max(max_ydot, std::abs((y1 - y0) / (traj.times[k + 1] - traj.times[k])));
  }

  const GramianResult g = empirical_gramian(sys, control_from_gain(K), x0, 0.01, 5.0, cfg);
  const Vec sv = g.singular_values();
  const double ratio = sv[sv.size() - 1] / sv[0];

  const bool pass = max_det <= 1e-12 && max_ydot <= 1e-9 && ratio <= 1e-6;
  return {0, "", pass,
          fmt("|det| %.3g, |ydot| %.3g, sigma ratio %.3g", max_det, max_ydot, ratio)};
}

// --- criterion 4 -----------------------------------------------------------

CriterionResult crit_riccati_anchor() {
  const Mat I2 = Mat::Identity(2, 2);
  const GainMatrix g2 = lqr_gain(Mat::Zero(2, 2), I2, I2, I2);
  const Mat P = -g2.K;  // K = -R^{-1} B' P with B = R = I
  const double residual = (Mat::Zero(2, 2).transpose() * P + P * Mat::Zero(2, 2) -
                           P * P + I2).norm();
  const double gain_err = (g2.K + I2).norm();

  const GainMatrix g1 = lqr_gain(mat({{1.0}}), mat({{1.0}}), mat({{1.0}}), mat({{1.0}}));
  const double scalar_err = std::abs(g1.K(0, 0) + (1.0 + std::sqrt(2.0)));

  const bool pass = gain_err <= 1e-8 && residual <= 1e-10 && scalar_err <= 1e-8;
  return {0, "", pass,
          fmt("||K+I|| %.3g, residual %.3g, scalar error %.3g", gain_err, residual, scalar_err)};
}

// --- criterion 5 -----------------------------------------------------------

struct GradCheck {
  double rel_small = 0.0;
  double ratio = 0.0;
};

GradCheck gradient_check(const ControlAffineSystem& sys, const Mat& K, const Vec& x0) {
  const CostSpec spec = quadratic_spec(sys.n(), ZetaPolicy::fixed(10.0), 1.0);
  const IntegratorConfig cfg{1e-3};
  const AugmentedState z0 = AugmentedState::seed(x0, spec.epsilon, spec.Qf);
  const Vec g = gradient(sys, spec, K, 0.0, 1.0, z0, cfg);
  auto err_at = [&](double delta) {
    const Vec fd = fd_gradient(sys, spec, K, 0.0, 1.0, z0, cfg, delta);
    return (g - fd).norm() / std::max(1.0, fd.norm());
  };
  const double e_small = err_at(1e-3), e_big = err_at(2e-3);
  return {e_small, e_big / std::max(e_small, 1e-300)};
}

CriterionResult crit_gradient() {
  const GradCheck a =
      gradient_check(holonomic_bearing_system(), -Mat::Identity(2, 2), vec({-1.0, 2.0}));
  const ControlAffineSystem lti =
      lti_system(mat({{0.3, 1.0}, {-0.5, -0.2}}), Mat::Identity(2, 2), mat({{1.0, 0.2}}));
  const GradCheck b =
      gradient_check(lti, mat({{-1.0, -0.3}, {0.2, -1.5}}), vec({0.8, -0.5}));
  auto ok = [](const GradCheck& c) {
    return c.rel_small <= 1e-4 && c.ratio >= 2.5 && c.ratio <= 6.0;
  };
  return {0, "", ok(a) && ok(b),
          fmt("bearing: err %.3g ratio %.2f; ", a.rel_small, a.ratio) +
              fmt("lti: err %.3g ratio %.2f", b.rel_small, b.ratio)};
}

// --- criteria 6-9 share two desk-scale synthesis runs ----------------------
//
// The improvement run uses a fixed saturation level sitting above the
// baseline's (constant) unsaturated index, so the observability reward stays
// active and actually shapes the gains.  Under the decay rule the reward
// saturates from t=0 on this example (the bearing gradient norm never drops
// below the shrinking threshold) and contributes no gradient, so that run is
// kept separately for the stability/Lyapunov checks it is specified for.

struct DeskRun {
  CostSpec spec;
  SegmentPlan plan;
  SynthesisResult syn, base;
  double ratio_syn = 0.0, ratio_base = 0.0;
};

DeskRun make_desk_run(ZetaPolicy zeta) {
  DeskRun r;
  const ControlAffineSystem sys = holonomic_bearing_system();
  r.spec = quadratic_spec(2, zeta, 10.0);
  r.plan = SegmentPlan::uniform(10.0, 1.0);
  const IntegratorConfig cfg{1e-3};
  const Vec x0 = vec({-1.0, 2.0});
  r.syn = synthesize(sys, r.spec, r.plan, OptimizerConfig{}, cfg, x0);
  r.base = evaluate_piecewise(sys, r.spec, r.plan, cfg, x0, -Mat::Identity(2, 2));
  auto sigma_ratio = [&](const std::vector<GainMatrix>& gains) {
    const GramianResult g =
        empirical_gramian(sys, control_from_piecewise(gains), x0, 0.01, 5.0, cfg);
    const Vec sv = g.singular_values();
    return sv[sv.size() - 1] / sv[0];
  };
  r.ratio_syn = sigma_ratio(r.syn.gains);
  r.ratio_base = sigma_ratio(r.base.gains);
  return r;
}

const DeskRun& desk_run_active() {
  static const DeskRun run = make_desk_run(ZetaPolicy::fixed(10.0));
  return run;
}

const DeskRun& desk_run_decay() {
  static const DeskRun run = make_desk_run(ZetaPolicy::decay(1.0));
  return run;
}

CriterionResult crit_improvement() {
  const DeskRun& r = desk_run_active();
  const bool cost_ok = r.syn.total_cost < r.base.total_cost;
  const bool obs_ok = r.syn.total_l2_unsat > r.base.total_l2_unsat;
  const bool sig_ok = r.ratio_syn >= 1e-3 && r.ratio_base <= 1e-6;
  return {0, "", cost_ok && obs_ok && sig_ok,
          fmt("cost %.6g vs %.6g, ", r.syn.total_cost, r.base.total_cost) +
              fmt("obs %.4g vs %.4g, ", r.syn.total_l2_unsat, r.base.total_l2_unsat) +
              fmt("sigma ratio %.3g vs %.3g", r.ratio_syn, r.ratio_base)};
}

CriterionResult crit_stability() {
  const DeskRun& r = desk_run_decay();
  const double xf_norm = r.syn.trajectory.states.back().norm();
  const LyapunovTrace lyap = lyapunov_trace(r.syn, r.spec, r.plan);
  double lemma1 = 0.0;
  for (std::size_t k = 0; k < r.syn.trajectory.size(); ++k) {
    const Vec& x = r.syn.trajectory.states[k];
    lemma1 = std::min(lemma1, x.dot(r.spec.Q * x) - r.syn.l2_samples[k]);
  }
  const bool pass = xf_norm <= 1e-2 && lyap.nonincreasing && lemma1 >= -1e-12;
  return {0, "", pass,
          fmt("||x(tf)|| %.3g, min(x'Qx - l2) %.3g, ", xf_norm, lemma1) +
              (lyap.nonincreasing ? "lyapunov nonincreasing" : "lyapunov VIOLATED")};
}

CriterionResult crit_algorithm_mechanics() {
  const DeskRun& r = desk_run_active();
  const double mu0 = OptimizerConfig{}.mu0;
  bool schedule_ok = true;
  for (const auto& seg : r.syn.per_segment) {
    int i = 1;
    for (const auto& rec : seg.trace) {
      // The applied step is mu0/i, possibly halved after divergence recovery.
      bool match = false;
      double expected = mu0 / i;
      for (int k = 0; k <= 10 && !match; ++k, expected /= 2.0)
        match = std::abs(rec.mu - expected) <= 1e-12 * mu0;
      schedule_ok = schedule_ok && match;
      if (rec.cvx_check) ++i;
    }
    schedule_ok = schedule_ok && (seg.status == TerminationStatus::Converged ||
                                  seg.status == TerminationStatus::IterationCapped);
  }

  std::mt19937 rng(12345);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  bool fuzz_ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const int P = dim(rng);
    Vec gc(P), gp(P), kc(P), kn(P);
    for (int j = 0; j < P; ++j) {
      gc[j] = gauss(rng);
      gp[j] = gauss(rng);
      kc[j] = gauss(rng);
      const double c = coin(rng);
      kn[j] = kc[j] + (c < 0.2 ? 0.0 : c < 0.4 ? 1e-15 : gauss(rng));
    }
    fuzz_ok = fuzz_ok && secant_hessian(gc, gp, kn, kc).allFinite();
  }

  return {0, "", schedule_ok && fuzz_ok,
          std::string(schedule_ok ? "step sizes follow mu0/i" : "step schedule MISMATCH") +
              (fuzz_ok ? ", secant guard finite over 1000 fuzz trials"
                       : ", secant guard produced non-finite entries")};
}

CriterionResult crit_cost_bounds() {
  const DeskRun& r = desk_run_active();
  double worst = 0.0;
  for (std::size_t s = 0; s < r.syn.per_segment.size(); ++s) {
    const auto& seg = r.syn.per_segment[s];
    const double span = r.plan.boundaries[s + 1] - r.plan.boundaries[s];
    for (const auto& rec : seg.trace) {
      const double lower = rec.l1_integral - seg.zeta * span + rec.terminal;
      const double upper = rec.l1_integral + rec.terminal;
      const double tol = 1e-9 * std::max(1.0, std::abs(rec.J));
      worst = std::max({worst, lower - rec.J - tol, rec.J - upper - tol});
    }
  }
  return {0, "", worst <= 0.0, fmt("max sandwich violation %.3g", std::max(worst, 0.0))};
}

// --- criterion 10 ----------------------------------------------------------

class ExprGen {
 public:
  explicit ExprGen(unsigned seed) : rng_(seed) {}

  std::string generate(int depth) {
    if (depth == 0) return leaf();
    switch (pick_(rng_) % 8) {
      case 0: return "(" + generate(depth - 1) + ")+(" + generate(depth - 1) + ")";
      case 1: return "(" + generate(depth - 1) + ")-(" + generate(depth - 1) + ")";
      case 2: return "(" + generate(depth - 1) + ")*(" + generate(depth - 1) + ")";
      case 3: {
        // keep the denominator bounded away from zero
        const std::string b = generate(depth - 1);
        return "(" + generate(depth - 1) + ")/((" + b + ")*(" + b + ")+1)";
      }
      case 4: return "(" + generate(depth - 1) + ")^" + (pick_(rng_) % 2 ? "2" : "3");
      case 5: {
        static const char* fns[] = {"sin", "cos", "exp"};
        return std::string(fns[pick_(rng_) % 3]) + "(" + generate(depth - 1) + ")";
      }
      case 6: {
        static const char* fns[] = {"sqrt", "log"};
        return std::string(fns[pick_(rng_) % 2]) + "(abs(" + generate(depth - 1) + ")+1)";
      }
      default: return "-(" + generate(depth - 1) + ")";
    }
  }

  Vec point() {
    Vec v(4);  // x1 x2 u1 t
    for (int i = 0; i < 4; ++i) v[i] = unif_(rng_);
    v[3] = std::abs(v[3]);
    return v;
  }

 private:
  std::mt19937 rng_;
  std::uniform_int_distribution<int> pick_{0, 1 << 20};
  std::uniform_real_distribution<double> unif_{-2.0, 2.0};

  std::string leaf() {
    switch (pick_(rng_) % 5) {
      case 0: return "x1";
      case 1: return "x2";
      case 2: return "u1";
      case 3: return "t";
      default: {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", unif_(rng_));
        return buf;
      }
    }
  }
};

CriterionResult crit_expressions() {
  ExprGen gen(777);
  int checked = 0, attempts = 0;
  double worst_rt = 0.0, worst_grad = 0.0;
  while (checked < 100 && attempts < 400) {
    ++attempts;
    const std::string text = gen.generate(3);
    const expr::Expression e = expr::parse(text, 2, 1);
    const expr::Expression reparsed = expr::parse(e.print(), 2, 1);
    const expr::Expression dx1 = e.differentiate({expr::VarKind::State, 1});

    int valid_points = 0;
    bool usable = true;
    for (int trial = 0; trial < 20 && valid_points < 3 && usable; ++trial) {
      const Vec pt = gen.point();
      const Vec x = pt.head(2), u = pt.segment(2, 1);
      const double t = pt[3];
      try {
        const double v = e.eval(x, u, t);
        const double v2 = reparsed.eval(x, u, t);
        if (!std::isfinite(v) || std::abs(v) > 1e8) continue;
        worst_rt = std::max(worst_rt, std::abs(v - v2) / std::max(1.0, std::abs(v)));

        const double delta = 1e-5;
        auto shifted = [&](double d) {
          Vec xs = x;
          xs[0] += d;
          return e.eval(xs, u, t);
        };
        const double fd = (shifted(delta) - shifted(-delta)) / (2 * delta);
        const double fd2 = (shifted(delta / 2) - shifted(-delta / 2)) / delta;
        // only trust points where the quotient has converged (no kink nearby)
        if (!std::isfinite(fd) || std::abs(fd) > 1e6 ||
            std::abs(fd - fd2) > 1e-7 * std::max(1.0, std::abs(fd)))
          continue;
        const double an = dx1.eval(x, u, t);
        worst_grad =
            std::max(worst_grad, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
        ++valid_points;
      } catch (const DomainError&) {
        continue;
      }
    }
    if (usable && valid_points >= 1) ++checked;
  }
  const bool pass = checked >= 100 && worst_rt <= 1e-12 && worst_grad <= 1e-6;
  return {0, "", pass,
          fmt("%g expressions, round-trip err %.3g, derivative err %.3g",
              static_cast<double>(checked), worst_rt, worst_grad)};
}

}  // namespace

std::vector<CriterionResult> run_acceptance() {
  std::vector<CriterionResult> out;
  out.push_back(guard(1, "linear Gramian oracle", crit_gramian_oracle));
  out.push_back(guard(2, "scalar Gramian trace", crit_scalar_trace));
  out.push_back(guard(3, "bearing LQR unobservability", crit_lqr_unobservable));
  out.push_back(guard(4, "Riccati anchors", crit_riccati_anchor));
  out.push_back(guard(5, "gradient vs finite difference", crit_gradient));
  out.push_back(guard(6, "synthesis improves on constant gain", crit_improvement));
  out.push_back(guard(7, "closed-loop stability", crit_stability));
  out.push_back(guard(8, "descent mechanics", crit_algorithm_mechanics));
  out.push_back(guard(9, "cost sandwich bounds", crit_cost_bounds));
  out.push_back(guard(10, "expression layer properties", crit_expressions));
  return out;
}

}  // namespace obsyn
