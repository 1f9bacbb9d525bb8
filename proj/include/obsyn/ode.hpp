#ifndef OBSYN_ODE_HPP
#define OBSYN_ODE_HPP

#include <functional>

#include "obsyn/common.hpp"
#include "obsyn/model.hpp"

namespace obsyn {

struct IntegratorConfig {
  double dt = 1e-3;
};

using Rhs = std::function<Vec(double, const Vec&)>;

/// One classical RK4 step of size h.
Vec rk4_step(const Rhs& f, double t, const Vec& z, double h);

/// Fixed-step RK4 on the uniform grid t0, t0+dt, ...; the last step is
/// shortened to land exactly on t1. Both endpoints are included in the
/// returned trajectory. Throws DivergenceError when the state goes
/// non-finite, DomainError when f does.
Trajectory integrate(const Rhs& f, const Vec& z0, double t0, double t1,
                     const IntegratorConfig& cfg);

}  // namespace obsyn

#endif
