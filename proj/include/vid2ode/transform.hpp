#pragma once

#include <Eigen/Dense>

namespace vid2ode::xform {

using Vec2 = Eigen::Vector2d;

// Learnable bijection between spatial (pixel) and physical coordinates:
//   x_p = s * (Q(theta) x_s - t),   x_s = Q(theta)^T (x_p / s) + t
// Scale is parameterized as s = exp(log_s) so positivity needs no constraint.
// theta defaults to 0 and stays frozen for the bundled benchmarks.
struct TransformParams {
  double log_s = 0.0;
  Vec2 t = Vec2::Zero();
  double theta = 0.0;

  double s() const { return std::exp(log_s); }
  Eigen::Matrix2d rotation() const;  // Q(theta)

  Vec2 to_physical(const Vec2& x_s) const;
  Vec2 to_spatial(const Vec2& x_p) const;

  // Reverse-mode accumulation. Given dL/d(output), adds the contributions to
  // dL/d(input), dL/d(log_s) and dL/d(t). theta is frozen (no gradient).
  void to_physical_vjp(const Vec2& x_s, const Vec2& out_bar, Vec2* x_s_bar,
                       double* log_s_bar, Vec2* t_bar) const;
  void to_spatial_vjp(const Vec2& x_p, const Vec2& out_bar, Vec2* x_p_bar,
                      double* log_s_bar, Vec2* t_bar) const;
};

}  // namespace vid2ode::xform
