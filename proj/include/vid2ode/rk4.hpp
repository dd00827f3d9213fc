#pragma once

#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "vid2ode/util.hpp"

namespace vid2ode::dyn {

using StateVec = Eigen::VectorXd;

// Classical 4th-order Runge-Kutta update. h may be negative (backward
// integration). Throws Error if any intermediate evaluation is non-finite.
template <typename Rhs>
StateVec rk4_step(const Rhs& f, const StateVec& x, double h) {
  StateVec k1 = f(x);
  StateVec k2 = f((x + 0.5 * h * k1).eval());
  StateVec k3 = f((x + 0.5 * h * k2).eval());
  StateVec k4 = f((x + h * k3).eval());
  StateVec out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) throw Error("integration diverged in rk4_step");
  return out;
}

// Single RK4 step with non-finite values tolerated (caller clamps). Used by
// the training-time rollouts where early coefficient matrices can be unstable.
template <typename Rhs>
StateVec rk4_step_unchecked(const Rhs& f, const StateVec& x, double h) {
  StateVec k1 = f(x);
  StateVec k2 = f((x + 0.5 * h * k1).eval());
  StateVec k3 = f((x + 0.5 * h * k2).eval());
  StateVec k4 = f((x + h * k3).eval());
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace vid2ode::dyn
