#include "obsyn/sensitivity.hpp"

#include <cmath>

namespace obsyn {

namespace {

std::vector<Vec> perturbed_outputs_of(const ControlAffineSystem& sys,
                                      const std::vector<Vec>& perturbed) {
  std::vector<Vec> ys;
  ys.reserve(perturbed.size());
  for (const auto& x : perturbed) ys.push_back(eval_output(sys, x));
  return ys;
}

// d f(x, Kx) / dk_{ab} = f_a(x) x_b, columns flattened row-major over (a, b).
Mat gain_forcing(const ControlAffineSystem& sys, const Vec& x, int p) {
  const int n = static_cast<int>(x.size());
  Mat B(n, p * n);
  for (int a = 0; a < p; ++a) {
    const Vec fa = sys.control_field(a, x);
    for (int b = 0; b < n; ++b) B.col(a * n + b) = fa * x[b];
  }
  return B;
}

}  // namespace

AugmentedState AugmentedState::seed(const Vec& x_j, double eps, const Mat& Qf) {
  AugmentedState z;
  z.nominal = x_j;
  const auto seeds = perturbed_initial_conditions(x_j, eps);
  z.perturbed.assign(seeds.begin(), seeds.end());
  z.running_cost = terminal_cost(x_j, Qf);
  return z;
}

int AugmentedState::dim() const {
  const int n = static_cast<int>(nominal.size());
  return n * (2 * n + 1) + 1;
}

Vec AugmentedState::pack() const {
  const int n = static_cast<int>(nominal.size());
  Vec z(dim());
  z.head(n) = nominal;
  for (std::size_t i = 0; i < perturbed.size(); ++i)
    z.segment(n * (1 + static_cast<int>(i)), n) = perturbed[i];
  z[z.size() - 1] = running_cost;
  return z;
}

AugmentedState AugmentedState::unpack(const Vec& z, int n) {
  if (z.size() != n * (2 * n + 1) + 1)
    throw DimensionError("augmented vector has wrong dimension");
  AugmentedState s;
  s.nominal = z.head(n);
  s.perturbed.reserve(2 * static_cast<std::size_t>(n));
  for (int i = 0; i < 2 * n; ++i) s.perturbed.push_back(z.segment(n * (1 + i), n));
  s.running_cost = z[z.size() - 1];
  return s;
}

Vec build_H(const ControlAffineSystem& sys, const CostSpec& spec, const Mat& K,
            double zeta, double t, const AugmentedState& z) {
  const int n = sys.n();
  Vec dz(z.dim());
  dz.head(n) = eval_closed_loop(sys, z.nominal, K);
  for (std::size_t i = 0; i < z.perturbed.size(); ++i)
    dz.segment(n * (1 + static_cast<int>(i)), n) = eval_closed_loop(sys, z.perturbed[i], K);
  const auto ys = perturbed_outputs_of(sys, z.perturbed);
  const double gamma = gamma_integrand(t, z.nominal, ys, K, spec, zeta);
  // L is time-invariant, so Ldot = grad L . f = 2 (Qf x) . xdot.
  const double l_dot = 2.0 * (spec.Qf * z.nominal).dot(dz.head(n));
  dz[dz.size() - 1] = gamma + l_dot;
  return dz;
}

SegmentEval integrate_augmented(const ControlAffineSystem& sys, const CostSpec& spec,
                                const Mat& K, double t0, double t1,
                                const AugmentedState& z0, const IntegratorConfig& cfg) {
  const int n = sys.n();
  const int ns = n * (2 * n + 1);
  const ZetaValue zv = zeta_for_segment(spec.zeta, z0.nominal, spec.Q, t0, t1);

  // State rows only; the cost row is accumulated by trapezoid below.
  Vec s0(ns);
  s0.head(n) = z0.nominal;
  for (std::size_t i = 0; i < z0.perturbed.size(); ++i)
    s0.segment(n * (1 + static_cast<int>(i)), n) = z0.perturbed[i];

  const Rhs rhs = [&](double, const Vec& s) {
    Vec ds(ns);
    for (int c = 0; c < 2 * n + 1; ++c)
      ds.segment(c * n, n) = eval_closed_loop(sys, s.segment(c * n, n), K);
    return ds;
  };
  const Trajectory traj = integrate(rhs, s0, t0, t1, cfg);

  SegmentEval ev;
  ev.zeta = zv.value;
  ev.times = traj.times;
  const std::size_t npts = traj.size();
  ev.nominal_states.reserve(npts);
  ev.l1_samples.reserve(npts);
  ev.l2_samples.reserve(npts);
  ev.l2_unsat_samples.reserve(npts);

  std::vector<double> gamma_samples;
  gamma_samples.reserve(npts);
  for (std::size_t k = 0; k < npts; ++k) {
    const Vec x = traj.states[k].head(n);
    std::vector<Vec> ys;
    ys.reserve(2 * static_cast<std::size_t>(n));
    for (int i = 0; i < 2 * n; ++i)
      ys.push_back(eval_output(sys, traj.states[k].segment(n * (1 + i), n)));
    const double t = traj.times[k];
    const double v1 = l1(x, K * x, spec);
    const double unsat = unsaturated_obs(ys, spec.epsilon);
    const double v2 = std::exp(-t) * sat(unsat, zv.value);
    ev.nominal_states.push_back(x);
    ev.l1_samples.push_back(v1);
    ev.l2_samples.push_back(v2);
    ev.l2_unsat_samples.push_back(std::exp(-t) * unsat);
    gamma_samples.push_back(v1 - v2);
  }

  double gamma_int = 0.0;
  for (std::size_t k = 0; k + 1 < npts; ++k) {
    const double h = traj.times[k + 1] - traj.times[k];
    gamma_int += 0.5 * h * (gamma_samples[k] + gamma_samples[k + 1]);
    ev.l1_integral += 0.5 * h * (ev.l1_samples[k] + ev.l1_samples[k + 1]);
    ev.l2_integral += 0.5 * h * (ev.l2_samples[k] + ev.l2_samples[k + 1]);
    ev.l2_unsat_integral += 0.5 * h * (ev.l2_unsat_samples[k] + ev.l2_unsat_samples[k + 1]);
  }

  ev.final_state = AugmentedState::unpack(
      (Vec(ns + 1) << traj.states.back(), 0.0).finished(), n);
  ev.terminal = terminal_cost(ev.final_state.nominal, spec.Qf);
  ev.J = gamma_int + ev.terminal;
  ev.final_state.running_cost = ev.J;
  return ev;
}

Mat sensitivity_rhs(const ControlAffineSystem& sys, const CostSpec& spec, const Mat& K,
                    double zeta, double t, const AugmentedState& z, const Mat& Xbar) {
  const int D = z.dim();
  const int P = static_cast<int>(K.size());
  if (Xbar.rows() != D || Xbar.cols() != P)
    throw DimensionError("sensitivity block has wrong shape");
  const int n = sys.n();
  const Vec zp = z.pack();

  Mat dH_dz(D, D);
  for (int j = 0; j < D; ++j) {
    const double h = 1e-6 * (1.0 + std::abs(zp[j]));
    Vec a = zp, b = zp;
    a[j] += h;
    b[j] -= h;
    dH_dz.col(j) = (build_H(sys, spec, K, zeta, t, AugmentedState::unpack(a, n)) -
                    build_H(sys, spec, K, zeta, t, AugmentedState::unpack(b, n))) /
                   (2.0 * h);
  }

  Mat dH_dK(D, P);
  for (int a = 0; a < K.rows(); ++a) {
    for (int b = 0; b < K.cols(); ++b) {
      const double h = 1e-6 * (1.0 + std::abs(K(a, b)));
      Mat Kp = K, Km = K;
      Kp(a, b) += h;
      Km(a, b) -= h;
      dH_dK.col(a * static_cast<int>(K.cols()) + b) =
          (build_H(sys, spec, Kp, zeta, t, z) - build_H(sys, spec, Km, zeta, t, z)) /
          (2.0 * h);
    }
  }
  return dH_dz * Xbar + dH_dK;
}

Vec gradient(const ControlAffineSystem& sys, const CostSpec& spec, const Mat& K,
             double t0, double t1, const AugmentedState& z0, const IntegratorConfig& cfg) {
  const int n = sys.n();
  const int p = sys.p();
  const int P = p * n;
  const int nsub = 2 * n + 1;      // nominal + 2n perturbed
  const int ns = n * nsub;         // state rows
  const ZetaValue zv = zeta_for_segment(spec.zeta, z0.nominal, spec.Q, t0, t1);

  // Joint vector: states, then each substate's sensitivity block (n x P),
  // flattened column-major per block.
  Vec j0 = Vec::Zero(ns + ns * P);
  j0.head(n) = z0.nominal;
  for (std::size_t i = 0; i < z0.perturbed.size(); ++i)
    j0.segment(n * (1 + static_cast<int>(i)), n) = z0.perturbed[i];

  const Rhs rhs = [&](double, const Vec& z) {
    Vec dz(z.size());
    for (int c = 0; c < nsub; ++c) {
      const Vec x = z.segment(c * n, n);
      dz.segment(c * n, n) = eval_closed_loop(sys, x, K);
      const Mat A = closed_loop_jacobian(sys, x, K);
      const Mat B = gain_forcing(sys, x, p);
      const Eigen::Map<const Mat> S(z.data() + ns + c * n * P, n, P);
      Eigen::Map<Mat>(dz.data() + ns + c * n * P, n, P) = A * S + B;
    }
    return dz;
  };
  const Trajectory traj = integrate(rhs, j0, t0, t1, cfg);

  const double inv4e2 = 1.0 / (4.0 * spec.epsilon * spec.epsilon);
  Vec grad = Vec::Zero(P);
  std::vector<Vec> point_grads;
  point_grads.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    const Vec& z = traj.states[k];
    const Vec x = z.head(n);
    const Eigen::Map<const Mat> Sx(z.data() + ns, n, P);

    // l1 part: chain through the nominal state plus the direct K term.
    Vec g = Sx.transpose() * (2.0 * (spec.Q + K.transpose() * spec.R * K) * x);
    const Mat direct = 2.0 * (spec.R * K * x) * x.transpose();  // p x n
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < n; ++b) g[a * n + b] += direct(a, b);

    // l2 part, active only below the saturation threshold.
    double unsat = 0.0;
    std::vector<Vec> ydiffs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const Vec xp = z.segment(n * (1 + 2 * i), n);
      const Vec xm = z.segment(n * (2 + 2 * i), n);
      ydiffs[static_cast<std::size_t>(i)] = eval_output(sys, xp) - eval_output(sys, xm);
      unsat += ydiffs[static_cast<std::size_t>(i)].squaredNorm();
    }
    unsat *= inv4e2;
    if (sat_derivative(unsat, zv.value) > 0.0) {
      const double c = std::exp(-t) * inv4e2;
      Vec gl2 = Vec::Zero(P);
      for (int i = 0; i < n; ++i) {
        const Vec xp = z.segment(n * (1 + 2 * i), n);
        const Vec xm = z.segment(n * (2 + 2 * i), n);
        const Eigen::Map<const Mat> Sp(z.data() + ns + (1 + 2 * i) * n * P, n, P);
        const Eigen::Map<const Mat> Sm(z.data() + ns + (2 + 2 * i) * n * P, n, P);
        const Mat Jp = sys.output_jacobian(xp);
        const Mat Jm = sys.output_jacobian(xm);
        gl2 += 2.0 * ((Jp * Sp - Jm * Sm).transpose() * ydiffs[static_cast<std::size_t>(i)]);
      }
      g -= c * gl2;
    }
    point_grads.push_back(std::move(g));
  }

  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double h = traj.times[k + 1] - traj.times[k];
    grad += 0.5 * h * (point_grads[k] + point_grads[k + 1]);
  }

  // Terminal cost through the final nominal state.
  const Vec& zf = traj.states.back();
  const Eigen::Map<const Mat> Sxf(zf.data() + ns, n, P);
  grad += Sxf.transpose() * (2.0 * spec.Qf * zf.head(n));
  return grad;
}

Vec fd_gradient(const ControlAffineSystem& sys, const CostSpec& spec, const Mat& K,
                double t0, double t1, const AugmentedState& z0,
                const IntegratorConfig& cfg, double delta) {
  if (delta <= 0.0) throw ValidationError("finite-difference step must be positive");
  const int n = static_cast<int>(K.cols());
  const int p = static_cast<int>(K.rows());
  Vec g(p * n);
  for (int a = 0; a < p; ++a) {
    for (int b = 0; b < n; ++b) {
      Mat Kp = K, Km = K;
      Kp(a, b) += delta;
      Km(a, b) -= delta;
      const double Jp = integrate_augmented(sys, spec, Kp, t0, t1, z0, cfg).J;
      const double Jm = integrate_augmented(sys, spec, Km, t0, t1, z0, cfg).J;
      g[a * n + b] = (Jp - Jm) / (2.0 * delta);
    }
  }
  return g;
}

}  // namespace obsyn
