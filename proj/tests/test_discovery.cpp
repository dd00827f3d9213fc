#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "vid2ode/dataset.hpp"
#include "vid2ode/localize.hpp"
#include "vid2ode/losses.hpp"
#include "vid2ode/report.hpp"
#include "vid2ode/rescale.hpp"
#include "vid2ode/trainer.hpp"
#include "vid2ode/util.hpp"

using namespace vid2ode;
using discovery::DiscoveryModel;

namespace {

// Transform parameters that make to_physical(gt pixel coords) reproduce the
// world trajectory exactly, up to the renderer's y flip: x_p = (wx, -wy).
xform::TransformParams world_matching_transform(const synth::RenderConfig& cfg) {
  synth::PixelCoord p0 = synth::world_to_pixel_point(cfg.world_bounds.xmin,
                                                     cfg.world_bounds.ymin, cfg);
  synth::PixelCoord p1 = synth::world_to_pixel_point(cfg.world_bounds.xmin + 1.0,
                                                     cfg.world_bounds.ymin + 1.0, cfg);
  double sc = p1[0] - p0[0];  // pixels per world unit
  xform::TransformParams xf;
  xf.log_s = -std::log(sc);
  xf.t[0] = p0[0] - sc * cfg.world_bounds.xmin;
  xf.t[1] = p0[1] + sc * cfg.world_bounds.ymin;
  return xf;
}

// True coefficients rewritten for the y-flipped frame (wy -> -y).
features::CoefficientMatrix flip_y(const features::CoefficientMatrix& xi,
                                   const features::LibrarySpec& lib) {
  features::CoefficientMatrix out = xi;
  for (int r = 0; r < out.n_terms(); ++r) {
    int ey = lib.term_list[r][1];
    for (int c = 0; c < out.n_eqs(); ++c) {
      double sign = (ey % 2 ? -1.0 : 1.0) * (c == 1 ? -1.0 : 1.0);
      out.values(r, c) *= sign;
    }
  }
  return out;
}

DiscoveryModel model_from_ground_truth(const synth::VideoDataset& ds) {
  const auto& sys = dyn::system_by_name(ds.system_name);
  DiscoveryModel m;
  m.order = sys.order;
  m.dt = ds.data.dt;
  m.lib = sys.library;
  m.xi = flip_y(sys.true_coefficients, sys.library);
  m.xf = world_matching_transform(ds.render_config);
  for (const auto& g : ds.ground_truth) {
    Eigen::MatrixXd c(g.pixel.size(), 2);
    for (std::size_t k = 0; k < g.pixel.size(); ++k)
      c.row(k) = g.pixel[k].transpose();
    m.coords.push_back(std::move(c));
  }
  m.decoder = sprite::DecoderParams(ds.data.resolution);
  return m;
}

}  // namespace

TEST_CASE("localization is within one pixel of ground truth") {
  const auto& sys = dyn::system_by_name("duffing");
  synth::SynthOptions opt;
  opt.n_videos = 3;
  opt.n_frames = 80;
  opt.seed = 17;
  synth::VideoDataset ds = synth::synthesize_dataset(sys, opt);
  discovery::LocalizeResult loc = discovery::localize(ds.data);
  REQUIRE(loc.coords.size() == 3);
  int total = 0, good = 0;
  for (int v = 0; v < 3; ++v)
    for (int k = 0; k < 80; ++k) {
      Eigen::Vector2d err =
          loc.coords[v].row(k).transpose() - ds.ground_truth[v].pixel[k];
      ++total;
      if (err.norm() <= 1.0) ++good;
    }
  CHECK(good >= static_cast<int>(std::ceil(0.99 * total)));
  CHECK(loc.empty_foreground.empty());

  // The pooled median background recovers the clean background closely.
  float max_err = 0.f;
  const synth::Frame& bg = ds.render_config.background;
  for (std::size_t i = 0; i < bg.rgb.size(); ++i)
    max_err = std::max(max_err, std::abs(bg.rgb[i] - loc.background.rgb[i]));
  CHECK(max_err < 0.05f);
}

TEST_CASE("localize rejects a dataset with no moving object") {
  synth::FramesOnlyDataset ds;
  ds.dt = 0.05;
  ds.resolution = 16;
  synth::Video v;
  v.frames.assign(6, synth::procedural_background(16, 2));
  ds.videos.push_back(v);
  CHECK_THROWS_AS(discovery::localize(ds), Error);
}

TEST_CASE("physics losses vanish with the true model and beat xi = 0") {
  const auto& sys = dyn::system_by_name("duffing");
  synth::SynthOptions opt;
  opt.n_videos = 2;
  opt.n_frames = 60;
  opt.seed = 23;
  synth::VideoDataset ds = synth::synthesize_dataset(sys, opt);
  DiscoveryModel m = model_from_ground_truth(ds);
  discovery::LocalizeResult loc = discovery::localize(ds.data);
  discovery::init_decoder(m.decoder, loc.background);
  sprite::DecoderWorkspace ws;
  ws.refresh(m.decoder);

  discovery::LossWeights w;
  discovery::LossTerms truth, zero;
  DiscoveryModel mz = m;
  mz.xi.values.setZero();
  for (int v = 0; v < 2; ++v) {
    discovery::LossTerms a =
        discovery::video_losses(m, ws, ds.data.videos[v], v, w, nullptr);
    discovery::LossTerms b =
        discovery::video_losses(mz, ws, ds.data.videos[v], v, w, nullptr);
    truth.recon += a.recon;
    truth.xdot += a.xdot;
    truth.total += a.total;
    zero.xdot += b.xdot;
    zero.total += b.total;
  }
  CHECK(truth.recon == doctest::Approx(truth.recon));  // finite
  CHECK(truth.xdot < 1e-3);                            // truncation-level residual
  CHECK(truth.xdot < 0.01 * zero.xdot);
  CHECK(truth.total <= zero.total);
}

TEST_CASE("loss_xdot decays at fourth order in dt on true trajectories") {
  const auto& sys = dyn::system_by_name("duffing");
  dyn::StateVec x0(2);
  x0 << 0.8, -0.6;
  std::vector<double> losses;
  for (double dt : {0.05, 0.025, 0.0125}) {
    int n = static_cast<int>(std::llround(4.0 / dt));
    dyn::Trajectory traj = dyn::simulate(sys, x0, n, dt);
    DiscoveryModel m;
    m.order = 1;
    m.dt = dt;
    m.lib = sys.library;
    m.xi = sys.true_coefficients;
    m.coords.push_back(traj.states);  // identity transform: x_p = x_s
    losses.push_back(discovery::loss_xdot(m, 0, nullptr));
  }
  for (std::size_t i = 0; i + 1 < losses.size(); ++i) {
    double order = std::log2(losses[i] / losses[i + 1]);
    CHECK(order > 3.5);
    CHECK(order < 4.5);
  }
}

TEST_CASE("divergent rollouts are clamped with the fixed penalty") {
  const auto& sys = dyn::system_by_name("duffing");
  synth::SynthOptions opt;
  opt.n_videos = 1;
  opt.n_frames = 9;
  opt.seed = 29;
  synth::VideoDataset ds = synth::synthesize_dataset(sys, opt);
  DiscoveryModel m = model_from_ground_truth(ds);
  m.xi.values.setConstant(1e8);  // guaranteed blow-up within one step
  sprite::DecoderWorkspace ws;
  ws.refresh(m.decoder);
  int clamped = 0;
  auto g = discovery::VideoGrads(9, ds.data.resolution, m.lib.n_terms(), 2);
  double loss =
      discovery::loss_int(m, ws, ds.data.videos[0], 0, 3, &g, &clamped);
  CHECK(clamped > 0);
  const int n_anchors = 9 - 2 * 3;
  double weight = 1.0 / (n_anchors * 7.0);
  CHECK(loss >= discovery::kClampPenalty * weight * clamped);
  CHECK(std::isfinite(loss));
  CHECK(g.xi.allFinite());
}

TEST_CASE("second-order lift on a linear ramp gives unit velocities") {
  Eigen::MatrixXd coords(6, 2);
  for (int k = 0; k < 6; ++k) {
    coords(k, 0) = 0.25 + k * 0.05;
    coords(k, 1) = -1.0 + k * 0.05;
  }
  Eigen::MatrixXd z = discovery::second_order_lift(coords, 0.05);
  REQUIRE(z.rows() == 4);
  REQUIRE(z.cols() == 4);
  for (int j = 0; j < 4; ++j) {
    CHECK(z(j, 0) == doctest::Approx(coords(j + 1, 0)).epsilon(1e-12));
    CHECK(z(j, 1) == doctest::Approx(coords(j + 1, 1)).epsilon(1e-12));
    CHECK(z(j, 2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(z(j, 3) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(discovery::second_order_lift(coords.topRows(2), 0.05), Error);
}

TEST_CASE("rescaling degree law reproduces the reference examples") {
  CHECK(discovery::rescale_coefficient(-3.73, 3, 1.42) ==
        doctest::Approx(-1.85).epsilon(0.01 / 1.85));
  CHECK(discovery::rescale_coefficient(-2.69, 3, 1.65) ==
        doctest::Approx(-0.99).epsilon(0.01 / 0.99));
  // Degree-1 coefficients are invariant.
  CHECK(discovery::rescale_coefficient(0.37, 1, 3.91) == 0.37);
}

TEST_CASE("rescale detects scale and reflection and transforms coefficients") {
  const auto& sys = dyn::system_by_name("duffing");
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd learned(400, 2);
  for (int k = 0; k < 400; ++k) {
    learned(k, 0) = u(rng);
    learned(k, 1) = 0.6 * u(rng);
  }
  const double alpha = 2.0;
  Eigen::MatrixXd ref = learned * alpha;
  ref.col(1) *= -1.0;

  features::CoefficientMatrix xi = sys.true_coefficients;
  discovery::RescaleResult r =
      discovery::rescale(xi, sys.library, learned, &ref, false);
  CHECK(r.alpha == doctest::Approx(alpha).epsilon(1e-6));
  CHECK(r.signs[0] == 1.0);
  CHECK(r.signs[1] == -1.0);
  CHECK_FALSE(r.translation.has_value());
  for (int t = 0; t < xi.n_terms(); ++t) {
    int ex = sys.library.term_list[t][0], ey = sys.library.term_list[t][1];
    int d = ex + ey;
    for (int c = 0; c < 2; ++c) {
      if (!xi.active(t, c)) {
        CHECK_FALSE(r.xi.active(t, c));
        continue;
      }
      double s_eq = (c == 1) ? -1.0 : 1.0;
      double want = xi.values(t, c) * s_eq * std::pow(-1.0, ey) /
                    std::pow(alpha, d - 1);
      CHECK(r.xi.values(t, c) == doctest::Approx(want).epsilon(1e-9));
      CHECK(r.xi.active(t, c));
    }
  }
  // Without a reference, alpha normalizes the learned RMS to 1.
  discovery::RescaleResult n =
      discovery::rescale(xi, sys.library, learned, nullptr, false);
  double rms = std::sqrt(learned.array().square().mean());
  CHECK(n.alpha == doctest::Approx(1.0 / rms).epsilon(1e-9));
  CHECK(n.signs[0] == 1.0);
  CHECK(n.signs[1] == 1.0);
}

TEST_CASE("scoring counts true and false positives per equation") {
  const auto& sys = dyn::system_by_name("duffing");
  auto scores = discovery::score(sys.true_coefficients, sys.library, sys);
  REQUIRE(scores.size() == 2);
  CHECK(scores[0].tpt == 1);
  CHECK(scores[0].fpt == 0);
  CHECK(scores[1].tpt == 3);
  CHECK(scores[1].fpt == 0);

  features::CoefficientMatrix noisy = sys.true_coefficients;
  noisy.active(2, 0) = true;  // spurious x^2 in the first equation
  noisy.values(2, 0) = 0.4;
  noisy.values(1, 0) = 0.0;   // an active-but-zero entry counts as absent
  auto s2 = discovery::score(noisy, sys.library, sys);
  CHECK(s2[0].tpt == 0);
  CHECK(s2[0].fpt == 1);

  // Scoring is invariant under rescale (structure preserved).
  Eigen::MatrixXd pos = Eigen::MatrixXd::Random(100, 2);
  discovery::RescaleResult r =
      discovery::rescale(sys.true_coefficients, sys.library, pos, nullptr, false);
  CHECK((r.xi.active.array() == sys.true_coefficients.active.array()).all());
  auto s3 = discovery::score(r.xi, sys.library, sys);
  CHECK(s3[1].tpt == 3);
  CHECK(s3[1].fpt == 0);
}

TEST_CASE("equation text includes kinematic rows for second order") {
  const auto& sys = dyn::system_by_name("osc2d");
  auto eqs =
      discovery::equation_text(sys.library, sys.true_coefficients, sys.order);
  REQUIRE(eqs.size() == 4);
  CHECK(eqs[0] == "dx/dt = u");
  CHECK(eqs[1] == "dy/dt = v");
  CHECK(eqs[2].find("du/dt") != std::string::npos);
  CHECK(eqs[2].find("x") != std::string::npos);

  const auto& duf = dyn::system_by_name("duffing");
  auto e1 = discovery::equation_text(duf.library, duf.true_coefficients, 1);
  REQUIRE(e1.size() == 2);
  CHECK(e1[0].find("dx/dt") == 0);
  CHECK(e1[1].find("x^3") != std::string::npos);
}

TEST_CASE("translation invariance of unknown rows identifies magnetic") {
  CHECK(discovery::unknown_rows_translation_invariant(
      dyn::system_by_name("magnetic")));
  CHECK_FALSE(discovery::unknown_rows_translation_invariant(
      dyn::system_by_name("duffing")));
  CHECK_FALSE(discovery::unknown_rows_translation_invariant(
      dyn::system_by_name("osc2d")));
}

TEST_CASE("loss call counters audit every physics evaluation") {
  discovery::reset_loss_call_counts();
  auto before = discovery::loss_call_counts();
  CHECK(before.recon == 0);
  CHECK(before.xdot == 0);
  CHECK(before.integral == 0);

  const auto& sys = dyn::system_by_name("duffing");
  synth::SynthOptions opt;
  opt.n_videos = 1;
  opt.n_frames = 10;
  synth::VideoDataset ds = synth::synthesize_dataset(sys, opt);
  DiscoveryModel m = model_from_ground_truth(ds);
  sprite::DecoderWorkspace ws;
  ws.refresh(m.decoder);
  discovery::loss_recon(m, ws, ds.data.videos[0], 0, nullptr);
  discovery::loss_xdot(m, 0, nullptr);
  discovery::loss_xdot(m, 0, nullptr);
  auto after = discovery::loss_call_counts();
  CHECK(after.recon == 1);
  CHECK(after.xdot == 2);
  CHECK(after.integral == 0);
  discovery::reset_loss_call_counts();
}
