#include "obsyn/model.hpp"

namespace obsyn {

namespace {

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, int rows) {
  const int n = static_cast<int>(x.size());
  Mat J(rows, n);
  for (int j = 0; j < n; ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x[j]));
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

}  // namespace

ControlAffineSystem::ControlAffineSystem(int n, int p, int m, VectorField drift,
                                         std::vector<VectorField> control_fields,
                                         OutputMap output)
    : n_(n), p_(p), m_(m), drift_fn_(std::move(drift)),
      control_fields_(std::move(control_fields)), output_fn_(std::move(output)) {
  if (n_ < 1 || p_ < 1 || m_ < 1)
    throw ValidationError("system dimensions must satisfy n,p,m >= 1");
  if (static_cast<int>(control_fields_.size()) != p_)
    throw DimensionError("expected p control vector fields");

  // Probe the maps at a fixed point so shape mistakes surface at
  // construction. A DomainError here just means the probe point is outside
  // the model's domain; shapes are still enforced per call.
  const Vec probe = Vec::Ones(n_);
  try {
    if (drift_fn_(probe).size() != n_) throw DimensionError("drift must map R^n -> R^n");
    for (const auto& fi : control_fields_)
      if (fi(probe).size() != n_) throw DimensionError("control field must map R^n -> R^n");
    if (output_fn_(probe).size() != m_) throw DimensionError("output must map R^n -> R^m");
  } catch (const DomainError&) {
  }
}

void ControlAffineSystem::set_jacobians(JacobianFn drift_jac,
                                        std::vector<JacobianFn> control_jacs,
                                        JacobianFn output_jac) {
  if (static_cast<int>(control_jacs.size()) != p_)
    throw DimensionError("expected p control-field Jacobians");
  drift_jac_ = std::move(drift_jac);
  control_jacs_ = std::move(control_jacs);
  output_jac_ = std::move(output_jac);
}

Vec ControlAffineSystem::drift(const Vec& x) const {
  if (x.size() != n_) throw DimensionError("state dimension mismatch");
  return drift_fn_(x);
}

Vec ControlAffineSystem::control_field(int i, const Vec& x) const {
  if (x.size() != n_) throw DimensionError("state dimension mismatch");
  return control_fields_.at(static_cast<std::size_t>(i))(x);
}

Vec ControlAffineSystem::output(const Vec& x) const {
  if (x.size() != n_) throw DimensionError("state dimension mismatch");
  return output_fn_(x);
}

Mat ControlAffineSystem::drift_jacobian(const Vec& x) const {
  if (drift_jac_) return drift_jac_(x);
  return fd_jacobian(drift_fn_, x, n_);
}

Mat ControlAffineSystem::control_field_jacobian(int i, const Vec& x) const {
  if (!control_jacs_.empty()) return control_jacs_.at(static_cast<std::size_t>(i))(x);
  return fd_jacobian(control_fields_.at(static_cast<std::size_t>(i)), x, n_);
}

Mat ControlAffineSystem::output_jacobian(const Vec& x) const {
  if (output_jac_) return output_jac_(x);
  return fd_jacobian(output_fn_, x, m_);
}

GainMatrix::GainMatrix(Mat gain, double t0, double t1)
    : K(std::move(gain)), t_begin(t0), t_end(t1) {
  if (!K.allFinite()) throw ValidationError("gain entries must be finite");
  if (!(t_begin < t_end)) throw ValidationError("gain interval must be nonempty");
}

Vec Trajectory::state_at(double t) const {
  if (times.empty()) throw ValidationError("empty trajectory");
  if (t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times.begin());
  const double t0 = times[k - 1], t1 = times[k];
  const double a = (t - t0) / (t1 - t0);
  return (1.0 - a) * states[k - 1] + a * states[k];
}

Vec eval_dynamics(const ControlAffineSystem& sys, const Vec& x, const Vec& u) {
  if (u.size() != sys.p()) throw DimensionError("control dimension mismatch");
  Vec dx = sys.drift(x);
  for (int i = 0; i < sys.p(); ++i) dx += sys.control_field(i, x) * u[i];
  if (!dx.allFinite()) throw DomainError("dynamics evaluated to a non-finite value");
  return dx;
}

Vec eval_closed_loop(const ControlAffineSystem& sys, const Vec& x, const Mat& K) {
  if (K.rows() != sys.p() || K.cols() != sys.n())
    throw DimensionError("gain must be p x n");
  return eval_dynamics(sys, x, K * x);
}

Vec eval_output(const ControlAffineSystem& sys, const Vec& x) {
  Vec y = sys.output(x);
  if (!y.allFinite()) throw DomainError("output evaluated to a non-finite value");
  return y;
}

Mat closed_loop_jacobian(const ControlAffineSystem& sys, const Vec& x, const Mat& K) {
  const Vec u = K * x;
  Mat A = sys.drift_jacobian(x);
  for (int i = 0; i < sys.p(); ++i) {
    A += u[i] * sys.control_field_jacobian(i, x);
    A += sys.control_field(i, x) * K.row(i);
  }
  return A;
}

}  // namespace obsyn
