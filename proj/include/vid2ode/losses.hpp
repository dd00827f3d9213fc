#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "vid2ode/dataset.hpp"
#include "vid2ode/decoder.hpp"
#include "vid2ode/library.hpp"
#include "vid2ode/transform.hpp"

namespace vid2ode::discovery {

// Everything the four losses touch. For model_order == 2 the library runs
// over the lifted state (x, y, u, v); xi holds only the unknown acceleration
// rows (f, g) — the kinematic equations dx/dt = u, dy/dt = v are structural
// and never trained.
struct DiscoveryModel {
  int order = 1;  // 1 or 2
  double dt = 0.05;
  features::LibrarySpec lib;
  features::CoefficientMatrix xi;  // n_terms x 2
  xform::TransformParams xf;
  sprite::DecoderParams decoder;
  std::vector<Eigen::MatrixXd> coords;  // per video: m x 2 pixel coords x_s

  int state_dim() const { return order == 2 ? 4 : 2; }
};

struct LossWeights {
  double lambda1 = 1e-3;  // L_xdot
  double lambda2 = 1.0;   // L_int
  double lambda3 = 5e-3;  // L_reg
  int q = 3;
};

// Per-video gradient accumulator; reduced across videos in video order.
struct VideoGrads {
  Eigen::MatrixXd coords;  // m x 2
  sprite::DecoderGrads dec;
  double log_s = 0.0;
  Eigen::Vector2d t = Eigen::Vector2d::Zero();
  Eigen::MatrixXd xi;
  // When false (e.g. refine stage: decoder frozen), decoder-map adjoints are
  // skipped; coordinate/transform/coefficient adjoints are still produced.
  bool want_decoder = true;

  VideoGrads(int m, int resolution, int n_terms, int n_eqs)
      : coords(Eigen::MatrixXd::Zero(m, 2)),
        dec(resolution),
        xi(Eigen::MatrixXd::Zero(n_terms, n_eqs)) {}
};

struct LossTerms {
  double recon = 0.0;
  double xdot = 0.0;
  double integral = 0.0;
  double reg = 0.0;
  double total = 0.0;
  int clamped_rollouts = 0;
};

// Each loss is a per-video mean; gradients (optional) are accumulated into
// `g`, pre-multiplied by `grad_scale` (the loss weight lambda when composing
// the total loss; must be > 0 whenever g is given). The workspace must be
// refreshed for the model's current decoder parameters before any call.
double loss_recon(const DiscoveryModel& m, const sprite::DecoderWorkspace& ws,
                  const synth::Video& video, int vi, VideoGrads* g);
double loss_xdot(const DiscoveryModel& m, int vi, VideoGrads* g,
                 double grad_scale = 1.0);
double loss_int(const DiscoveryModel& m, const sprite::DecoderWorkspace& ws,
                const synth::Video& video, int vi, int q, VideoGrads* g,
                int* clamped_rollouts, double grad_scale = 1.0);

// L_recon + lambda1 L_xdot + lambda2 L_int per video (the regularizer is
// global, not per-video; see loss_reg).
LossTerms video_losses(const DiscoveryModel& m, const sprite::DecoderWorkspace& ws,
                       const synth::Video& video, int vi, const LossWeights& w,
                       VideoGrads* g);

// lambda3 * l_half(xi); subgradient accumulated into xi_bar if given.
double loss_reg(const DiscoveryModel& m, double lambda3, Eigen::MatrixXd* xi_bar);

// Interior lifted states: row j is (x, y, u, v) at frame j+1, velocities by
// central difference. Output is (m-2) x 4.
Eigen::MatrixXd second_order_lift(const Eigen::MatrixXd& coords_p, double dt);

// Training rollouts clamp instead of aborting when the current vector field
// diverges: any state component beyond this bound (or non-finite) makes each
// remaining term along that rollout direction contribute kClampPenalty with
// zero gradient.
inline constexpr double kRolloutStateBound = 1e4;
inline constexpr double kClampPenalty = 1e6;

// Audit counters (per-process) so pixel-only baselines can prove they never
// touched a physics loss.
struct LossCallCounts {
  std::uint64_t recon = 0;
  std::uint64_t xdot = 0;
  std::uint64_t integral = 0;
};
LossCallCounts loss_call_counts();
void reset_loss_call_counts();

}  // namespace vid2ode::discovery
