#include "vid2ode/transform.hpp"

#include <cmath>

namespace vid2ode::xform {

Eigen::Matrix2d TransformParams::rotation() const {
  Eigen::Matrix2d q;
  q << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
  return q;
}

Vec2 TransformParams::to_physical(const Vec2& x_s) const {
  return s() * (rotation() * x_s - t);
}

Vec2 TransformParams::to_spatial(const Vec2& x_p) const {
  return rotation().transpose() * (x_p / s()) + t;
}

void TransformParams::to_physical_vjp(const Vec2& x_s, const Vec2& out_bar,
                                      Vec2* x_s_bar, double* log_s_bar,
                                      Vec2* t_bar) const {
  const double sv = s();
  const Eigen::Matrix2d q = rotation();
  if (x_s_bar) *x_s_bar += sv * q.transpose() * out_bar;
  // d x_p / d log_s = x_p
  if (log_s_bar) *log_s_bar += out_bar.dot(sv * (q * x_s - t));
  if (t_bar) *t_bar += -sv * out_bar;
}

void TransformParams::to_spatial_vjp(const Vec2& x_p, const Vec2& out_bar,
                                     Vec2* x_p_bar, double* log_s_bar,
                                     Vec2* t_bar) const {
  const double sv = s();
  const Eigen::Matrix2d q = rotation();
  if (x_p_bar) *x_p_bar += q * (out_bar / sv);
  // d x_s / d log_s = -Q^T x_p / s
  if (log_s_bar) *log_s_bar += out_bar.dot(q.transpose() * (-x_p / sv));
  if (t_bar) *t_bar += out_bar;
}

}  // namespace vid2ode::xform
