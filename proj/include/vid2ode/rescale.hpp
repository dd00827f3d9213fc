#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "vid2ode/library.hpp"
#include "vid2ode/systems.hpp"

namespace vid2ode::discovery {

// Post-hoc variable rescaling: the learned physical frame relates to the
// reference frame by x_ref ~ S * alpha * x_learned + delta, with alpha > 0 a
// single scale (the renderer and the transform are both equal-scale affine)
// and S = diag(s_x, s_y), s in {-1,+1}, absorbing axis reflections the
// frozen-rotation transform cannot represent (image rows grow downward). A
// coefficient on a monomial of total degree d in equation a transforms as
//   xi' = xi * s_a * s_x^(ex) * s_y^(ey) / alpha^(d-1),
// which reduces to the plain degree law xi' = xi / alpha^(d-1) when S = I.
// alpha is RMS(reference)/RMS(learned) (the paper's D.1 example: -3.73 on x^3
// with alpha 1.42 -> -1.85); without a reference, alpha = 1/RMS(learned)
// (normalizes the learned trajectory to unit RMS). For lifted second-order
// states the velocity axes inherit the sign/scale of their position axis.
// delta (when requested) is estimated by mean-matching before scaling; it
// does not change the coefficients and is only meaningful for
// translation-invariant equations (Magnetic-type systems).
struct RescaleResult {
  double alpha = 1.0;
  Eigen::Vector2d signs = Eigen::Vector2d::Ones();
  std::optional<Eigen::Vector2d> translation;
  features::CoefficientMatrix xi;
};

RescaleResult rescale(const features::CoefficientMatrix& xi,
                      const features::LibrarySpec& lib,
                      const Eigen::MatrixXd& learned_positions,
                      const Eigen::MatrixXd* reference_positions,
                      bool estimate_translation);

// Single-coefficient degree law (no reflection), xi / alpha^(d-1).
double rescale_coefficient(double xi, int degree, double alpha);

// True/false positive active terms per equation column, matched by exponent
// tuple; pinned entries are excluded on both sides.
struct EquationScore {
  int tpt = 0;
  int fpt = 0;
};

std::vector<EquationScore> score(const features::CoefficientMatrix& xi,
                                 const features::LibrarySpec& lib,
                                 const dyn::SystemSpec& system);

}  // namespace vid2ode::discovery
