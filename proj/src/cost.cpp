#include "obsyn/cost.hpp"

#include <cmath>

namespace obsyn {

namespace {

void require_spd(const Mat& M, const char* name, bool strict) {
  if (M.rows() != M.cols()) throw ValidationError(std::string(name) + " must be square");
  if ((M - M.transpose()).lpNorm<Eigen::Infinity>() > 1e-10)
    throw ValidationError(std::string(name) + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(M);
  const double lo = es.eigenvalues().minCoeff();
  if (strict ? lo <= 0.0 : lo < -1e-10)
    throw ValidationError(std::string(name) + (strict ? " must be positive definite"
                                                      : " must be positive semidefinite"));
}

}  // namespace

void CostSpec::validate(int n, int p) const {
  require_spd(Q, "Q", true);
  require_spd(R, "R", true);
  require_spd(Qf, "Qf", false);
  if (Q.rows() != n) throw DimensionError("Q must be n x n");
  if (R.rows() != p) throw DimensionError("R must be p x p");
  if (Qf.rows() != n) throw DimensionError("Qf must be n x n");
  if (epsilon <= 0.0) throw ValidationError("epsilon must be positive");
  if (zeta.kind == ZetaPolicy::Kind::Decay && zeta.value <= 0.0)
    throw ValidationError("decay rate beta must be positive");
  if (zeta.kind == ZetaPolicy::Kind::Fixed && zeta.value < 0.0)
    throw ValidationError("fixed zeta must be nonnegative");
}

double sat(double x, double zeta) { return x > zeta ? zeta : x; }

double sat_derivative(double x, double zeta) { return x < zeta ? 1.0 : 0.0; }

double l1(const Vec& x, const Vec& u, const CostSpec& spec) {
  if (x.size() != spec.Q.rows() || u.size() != spec.R.rows())
    throw DimensionError("l1 dimension mismatch");
  return x.dot(spec.Q * x) + u.dot(spec.R * u);
}

double unsaturated_obs(const std::vector<Vec>& perturbed_outputs, double eps) {
  const std::size_t n2 = perturbed_outputs.size();
  if (n2 % 2 != 0) throw DimensionError("perturbed outputs must come in +/- pairs");
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < n2; i += 2)
    sum += (perturbed_outputs[i] - perturbed_outputs[i + 1]).squaredNorm();
  return sum / (4.0 * eps * eps);
}

double l2(double t, const std::vector<Vec>& perturbed_outputs, double zeta, double eps) {
  return std::exp(-t) * sat(unsaturated_obs(perturbed_outputs, eps), zeta);
}

ZetaValue zeta_for_segment(const ZetaPolicy& policy, const Vec& x_tj, const Mat& Q,
                           double t_begin, double t_next) {
  ZetaValue z;
  z.t_begin = t_begin;
  z.t_end = t_next;
  if (policy.kind == ZetaPolicy::Kind::Fixed) {
    z.value = policy.value;
    return z;
  }
  const double beta = policy.value;
  if (beta <= 0.0) throw ValidationError("decay rate beta must be positive");
  const double q_norm_sq = x_tj.dot(Q * x_tj);
  z.value = beta <= 0.5 ? q_norm_sq : std::exp((1.0 - 2.0 * beta) * t_next) * q_norm_sq;
  return z;
}

double terminal_cost(const Vec& x, const Mat& Qf) {
  if (x.size() != Qf.rows()) throw DimensionError("terminal cost dimension mismatch");
  return x.dot(Qf * x);
}

double gamma_integrand(double t, const Vec& x, const std::vector<Vec>& perturbed_outputs,
                       const Mat& K, const CostSpec& spec, double zeta) {
  return l1(x, K * x, spec) - l2(t, perturbed_outputs, zeta, spec.epsilon);
}

}  // namespace obsyn
