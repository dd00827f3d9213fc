#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "vid2ode/dataset.hpp"
#include "vid2ode/library.hpp"
#include "vid2ode/report.hpp"

namespace vid2ode::baselines {

struct StridgeResult {
  features::CoefficientMatrix xi;
  bool rank_deficient = false;  // minimum-norm solve was needed
  int iterations = 0;
};

// Sequential thresholded ridge regression on a column-normalized design
// (normalization exponent = the L_p norm used for column scales; 0 disables),
// thresholding at tol until a fixed point, then one unregularized
// least-squares pass on the survivors, coefficients un-normalized.
// Defaults: tol 0.05, ridge_lambda 1e-12, normalize 1.0.
StridgeResult stridge(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Xdot,
                      const features::LibrarySpec& lib, double tol = 0.05,
                      double ridge_lambda = 1e-12, double normalize = 1.0,
                      int max_iter = 20);

// Same, on an already-built design matrix (lifted states, pinned rows, ...).
StridgeResult stridge_design(const Eigen::MatrixXd& theta,
                             const Eigen::MatrixXd& Xdot, double tol = 0.05,
                             double ridge_lambda = 1e-12,
                             double normalize = 1.0, int max_iter = 20);

struct TwoStepConfig {
  double tol = 0.05;
  double ridge_lambda = 1e-12;
  double normalize = 1.0;
  // Coordinate-extraction refinement (reconstruction only, no physics).
  int pretrain_epochs = 30;
  double lr = 1e-3;
  double lr_mult_decoder = 10.0;
  int model_order = 1;
  int library_degree = 3;
  double scale_factor = 20.0;  // blind map: physical = (pixel - center) / 20
};

// Appendix-E-style two-step baseline: extract pixel coordinates with no
// physics constraint (localization plus reconstruction-only refinement of
// decoder and coordinates), map them through a fixed guessed transform
// (frame-center origin, scale 1/scale_factor), differentiate centrally, and
// regress with stridge. `coords_override` (when given) skips extraction and
// uses the supplied pixel coordinates together with the exact render map
// from `gt` (the ground-truth control: isolates the regression from both
// extraction noise and the guessed frame). Never evaluates L_xdot or L_int
// (auditable via loss_call_counts).
discovery::DiscoveryReport run_two_step(
    const synth::FramesOnlyDataset& ds, const TwoStepConfig& cfg,
    const synth::VideoDataset* gt,
    const std::vector<Eigen::MatrixXd>* coords_override = nullptr);

}  // namespace vid2ode::baselines
