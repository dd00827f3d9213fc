#include "vid2ode/render.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vid2ode/util.hpp"

namespace vid2ode::synth {

namespace {
// Shared scale/offset of the world->pixel affine map.
struct WorldMap {
  double scale;      // pixels per world unit
  double ox, oy;     // pixel offsets
};

WorldMap world_map(const RenderConfig& cfg) {
  const double H = cfg.output_resolution;
  const double m = cfg.margin_px();
  const WorldBounds& b = cfg.world_bounds;
  if (b.width() <= 0 || b.height() <= 0)
    throw Error("world_to_pixel: degenerate world bounds");
  double scale = (H - 2.0 * m) / std::max(b.width(), b.height());
  // Center the shorter axis inside the square frame.
  double ox = m + 0.5 * ((H - 2.0 * m) - scale * b.width());
  double oy = m + 0.5 * ((H - 2.0 * m) - scale * b.height());
  return {scale, ox, oy};
}
}  // namespace

PixelCoord world_to_pixel_point(double wx, double wy, const RenderConfig& cfg) {
  WorldMap mp = world_map(cfg);
  const double H = cfg.output_resolution;
  PixelCoord p;
  p[0] = mp.ox + mp.scale * (wx - cfg.world_bounds.xmin);
  p[1] = H - (mp.oy + mp.scale * (wy - cfg.world_bounds.ymin));  // y grows downward
  return p;
}

Eigen::Vector2d pixel_to_world_point(const PixelCoord& p, const RenderConfig& cfg) {
  WorldMap mp = world_map(cfg);
  const double H = cfg.output_resolution;
  Eigen::Vector2d w;
  w[0] = cfg.world_bounds.xmin + (p[0] - mp.ox) / mp.scale;
  w[1] = cfg.world_bounds.ymin + (H - p[1] - mp.oy) / mp.scale;
  return w;
}

std::vector<PixelCoord> world_to_pixel(const Eigen::MatrixXd& world_xy,
                                       const RenderConfig& cfg) {
  std::vector<PixelCoord> out;
  out.reserve(world_xy.rows());
  for (Eigen::Index k = 0; k < world_xy.rows(); ++k) {
    double wx = world_xy(k, 0), wy = world_xy(k, 1);
    if (wx < cfg.world_bounds.xmin || wx > cfg.world_bounds.xmax ||
        wy < cfg.world_bounds.ymin || wy > cfg.world_bounds.ymax)
      throw Error("trajectory point outside world bounds at frame " +
                  std::to_string(k));
    out.push_back(world_to_pixel_point(wx, wy, cfg));
  }
  return out;
}

WorldBounds default_world_bounds(const std::vector<Eigen::MatrixXd>& position_sets,
                                 double expand_fraction) {
  WorldBounds b;
  bool first = true;
  for (const auto& P : position_sets) {
    for (Eigen::Index k = 0; k < P.rows(); ++k) {
      double x = P(k, 0), y = P(k, 1);
      if (first) {
        b = {x, x, y, y};
        first = false;
      } else {
        b.xmin = std::min(b.xmin, x);
        b.xmax = std::max(b.xmax, x);
        b.ymin = std::min(b.ymin, y);
        b.ymax = std::max(b.ymax, y);
      }
    }
  }
  if (first) throw Error("default_world_bounds: no positions");
  double w = b.width(), h = b.height();
  double side = std::max(w, h);
  if (side == 0) side = 1.0;
  side *= 1.0 + expand_fraction;
  // Square the box around its center so corner pixel mapping is exact.
  double cx = 0.5 * (b.xmin + b.xmax), cy = 0.5 * (b.ymin + b.ymax);
  return {cx - side / 2, cx + side / 2, cy - side / 2, cy + side / 2};
}

std::vector<double> marker_alpha(const PixelCoord& center, const RenderConfig& cfg) {
  const int S = cfg.supersample_resolution;
  const int H = cfg.output_resolution;
  const int f = S / H;
  if (f * H != S)
    throw Error("supersample resolution must be divisible by output resolution");
  const double cx = center[0] * f;
  const double cy = center[1] * f;
  const double r = cfg.marker_radius_px;

  std::vector<double> alpha(static_cast<std::size_t>(H) * H, 0.0);
  int lo_row = std::max(0, static_cast<int>(std::floor(cy - r - 1)));
  int hi_row = std::min(S - 1, static_cast<int>(std::ceil(cy + r + 1)));
  int lo_col = std::max(0, static_cast<int>(std::floor(cx - r - 1)));
  int hi_col = std::min(S - 1, static_cast<int>(std::ceil(cx + r + 1)));
  const double inv = 1.0 / (f * f);
  for (int sr = lo_row; sr <= hi_row; ++sr) {
    for (int sc = lo_col; sc <= hi_col; ++sc) {
      double dx = sc + 0.5 - cx;
      double dy = sr + 0.5 - cy;
      double d = std::sqrt(dx * dx + dy * dy);
      // 1px-wide analytic edge ramp at the supersample grid.
      double cov = std::clamp(r - d + 0.5, 0.0, 1.0);
      if (cov > 0.0)
        alpha[static_cast<std::size_t>(sr / f) * H + (sc / f)] += cov * inv;
    }
  }
  if (cfg.hard_replace)
    for (double& a : alpha) a = a >= 0.5 ? 1.0 : 0.0;
  return alpha;
}

Frame render_frame(const PixelCoord& center, const RenderConfig& cfg) {
  const int H = cfg.output_resolution;
  if (cfg.background.h != H || cfg.background.w != H)
    throw Error("render: background resolution mismatch");
  std::vector<double> alpha = marker_alpha(center, cfg);
  Frame out = cfg.background;
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < H; ++c) {
      double a = alpha[static_cast<std::size_t>(r) * H + c];
      if (a == 0.0) continue;
      for (int ch = 0; ch < 3; ++ch) {
        double v = a * cfg.marker_color[ch] + (1.0 - a) * out.at(r, c, ch);
        out.at(r, c, ch) = static_cast<float>(v);
      }
    }
  }
  return out;
}

std::vector<Frame> render_video(const std::vector<PixelCoord>& coords,
                                const RenderConfig& cfg) {
  std::vector<Frame> frames(coords.size());
  parallel_for(coords.size(),
               [&](std::size_t k) { frames[k] = render_frame(coords[k], cfg); });
  return frames;
}

Frame procedural_background(int resolution, std::uint64_t seed) {
  // Low-frequency cosine mixture plus a little hash noise; looks vaguely like
  // an out-of-focus natural image and has enough contrast for localization
  // tests without drowning the marker.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::array<std::array<Wave, 4>, 3> waves;
  for (auto& chan : waves)
    for (auto& wv : chan)
      wv = {1.0 + 3.0 * u(rng), 1.0 + 3.0 * u(rng), 2.0 * M_PI * u(rng),
            0.08 + 0.10 * u(rng)};
  std::array<double, 3> base = {0.35 + 0.3 * u(rng), 0.35 + 0.3 * u(rng),
                                0.35 + 0.3 * u(rng)};
  Frame bg(resolution, resolution);
  for (int r = 0; r < resolution; ++r) {
    for (int c = 0; c < resolution; ++c) {
      double x = static_cast<double>(c) / resolution;
      double y = static_cast<double>(r) / resolution;
      for (int ch = 0; ch < 3; ++ch) {
        double v = base[ch];
        for (const auto& wv : waves[ch])
          v += wv.amp * std::cos(2.0 * M_PI * (wv.fx * x + wv.fy * y) + wv.phase);
        bg.at(r, c, ch) = static_cast<float>(std::clamp(v, 0.02, 0.98));
      }
    }
  }
  return bg;
}

}  // namespace vid2ode::synth
