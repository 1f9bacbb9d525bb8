#include "obsyn/ode.hpp"

#include <cmath>

namespace obsyn {

Vec rk4_step(const Rhs& f, double t, const Vec& z, double h) {
  const Vec k1 = f(t, z);
  const Vec k2 = f(t + 0.5 * h, z + (0.5 * h) * k1);
  const Vec k3 = f(t + 0.5 * h, z + (0.5 * h) * k2);
  const Vec k4 = f(t + h, z + h * k3);
  return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory integrate(const Rhs& f, const Vec& z0, double t0, double t1,
                     const IntegratorConfig& cfg) {
  if (cfg.dt <= 0.0) throw ValidationError("integrator dt must be positive");
  if (!(t0 < t1)) throw ValidationError("integration interval must be nonempty");
  if (!z0.allFinite()) throw DivergenceError("initial state non-finite", t0);

  Trajectory traj;
  const double span = t1 - t0;
  // Number of whole dt steps; the remainder becomes one shortened step.
  // The 1e-9*dt slack keeps span == k*dt from producing a spurious extra step.
  const auto whole = static_cast<long>(std::floor(span / cfg.dt + 1e-9));
  const bool exact = std::abs(span - static_cast<double>(whole) * cfg.dt) < 1e-9 * cfg.dt;

  traj.times.reserve(static_cast<std::size_t>(whole) + 2);
  traj.states.reserve(static_cast<std::size_t>(whole) + 2);
  traj.times.push_back(t0);
  traj.states.push_back(z0);

  Vec z = z0;
  for (long k = 0; k < whole; ++k) {
    const double t = t0 + static_cast<double>(k) * cfg.dt;
    const double tn = (k + 1 == whole && exact) ? t1 : t0 + static_cast<double>(k + 1) * cfg.dt;
    z = rk4_step(f, t, z, tn - t);
    if (!z.allFinite()) throw DivergenceError("state diverged", tn);
    traj.times.push_back(tn);
    traj.states.push_back(z);
  }
  if (!exact) {
    const double t = t0 + static_cast<double>(whole) * cfg.dt;
    z = rk4_step(f, t, z, t1 - t);
    if (!z.allFinite()) throw DivergenceError("state diverged", t1);
    traj.times.push_back(t1);
    traj.states.push_back(z);
  }
  return traj;
}

}  // namespace obsyn
