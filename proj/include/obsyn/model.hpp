#ifndef OBSYN_MODEL_HPP
#define OBSYN_MODEL_HPP

#include <functional>
#include <optional>
#include <vector>

#include "obsyn/common.hpp"

namespace obsyn {

using VectorField = std::function<Vec(const Vec&)>;
using OutputMap = std::function<Vec(const Vec&)>;
using JacobianFn = std::function<Mat(const Vec&)>;

/// Control-affine system  xdot = f0(x) + sum_i f_i(x) u_i,  y = h(x).
///
/// Immutable after construction; all evaluation is pure, so instances may
/// be shared freely across threads. Analytic Jacobians are optional; when
/// absent, callers fall back to finite differences.
class ControlAffineSystem {
 public:
  ControlAffineSystem(int n, int p, int m, VectorField drift,
                      std::vector<VectorField> control_fields, OutputMap output);

  void set_jacobians(JacobianFn drift_jac, std::vector<JacobianFn> control_jacs,
                     JacobianFn output_jac);
  bool has_jacobians() const { return drift_jac_ != nullptr; }

  int n() const { return n_; }
  int p() const { return p_; }
  int m() const { return m_; }

  Vec drift(const Vec& x) const;
  Vec control_field(int i, const Vec& x) const;
  Vec output(const Vec& x) const;

  /// Analytic Jacobians when set, central finite differences otherwise.
  Mat drift_jacobian(const Vec& x) const;
  Mat control_field_jacobian(int i, const Vec& x) const;
  Mat output_jacobian(const Vec& x) const;

 private:
  int n_, p_, m_;
  VectorField drift_fn_;
  std::vector<VectorField> control_fields_;
  OutputMap output_fn_;
  JacobianFn drift_jac_;
  std::vector<JacobianFn> control_jacs_;
  JacobianFn output_jac_;
};

/// Constant feedback gain u = Kx valid on [t_begin, t_end).
struct GainMatrix {
  Mat K;
  double t_begin = 0.0;
  double t_end = 0.0;

  GainMatrix() = default;
  GainMatrix(Mat gain, double t0, double t1);
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::optional<std::vector<Vec>> controls;
  std::optional<std::vector<Vec>> outputs;

  std::size_t size() const { return times.size(); }
  /// Piecewise-linear interpolation between grid points (plotting only).
  Vec state_at(double t) const;
};

Vec eval_dynamics(const ControlAffineSystem& sys, const Vec& x, const Vec& u);
Vec eval_closed_loop(const ControlAffineSystem& sys, const Vec& x, const Mat& K);
Vec eval_output(const ControlAffineSystem& sys, const Vec& x);

/// d f(x, Kx) / dx, analytic when the system carries Jacobians.
Mat closed_loop_jacobian(const ControlAffineSystem& sys, const Vec& x, const Mat& K);

}  // namespace obsyn

#endif
