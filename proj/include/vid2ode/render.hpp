#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "vid2ode/png_io.hpp"
#include "vid2ode/trajectory.hpp"

namespace vid2ode::synth {

struct WorldBounds {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
};

struct RenderConfig {
  int supersample_resolution = 256;
  int output_resolution = 64;
  double marker_radius_px = 8.0;  // at supersample resolution
  std::array<float, 3> marker_color = {0.95f, 0.25f, 0.15f};
  Frame background;  // at output resolution
  WorldBounds world_bounds;
  // Reproduces the binary pixel-replacement of the source videos instead of
  // anti-aliased alpha compositing.
  bool hard_replace = false;

  double margin_px() const {
    return marker_radius_px * output_resolution / supersample_resolution;
  }
};

using PixelCoord = Eigen::Vector2d;  // (x = column, y = row), origin top-left

// Affine world -> pixel map with equal scale on both axes (take the tighter
// axis), y flipped, and a marker-radius margin. Throws when a point falls
// outside world_bounds.
std::vector<PixelCoord> world_to_pixel(const Eigen::MatrixXd& world_xy,
                                       const RenderConfig& cfg);
PixelCoord world_to_pixel_point(double wx, double wy, const RenderConfig& cfg);
// Documented inverse of world_to_pixel_point.
Eigen::Vector2d pixel_to_world_point(const PixelCoord& p, const RenderConfig& cfg);

// Expanded (and squared-off) tight bounding box of the given positions.
WorldBounds default_world_bounds(const std::vector<Eigen::MatrixXd>& position_sets,
                                 double expand_fraction = 0.1);

// Marker coverage map at output resolution: anti-aliased circle drawn at the
// supersample resolution, box-filtered down. Values in [0,1].
std::vector<double> marker_alpha(const PixelCoord& center, const RenderConfig& cfg);

Frame render_frame(const PixelCoord& center, const RenderConfig& cfg);
std::vector<Frame> render_video(const std::vector<PixelCoord>& coords,
                                const RenderConfig& cfg);

// Deterministic procedurally generated background texture (so tests and the
// default synth path need no external image assets).
Frame procedural_background(int resolution, std::uint64_t seed);

}  // namespace vid2ode::synth
