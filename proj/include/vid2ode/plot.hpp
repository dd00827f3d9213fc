#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vid2ode/png_io.hpp"

namespace vid2ode::plot {

// Minimal line plot of one or more equal-footing series (e.g. loss traces)
// with autoscaled axes; values <= 0 are clipped when log_y is set.
void plot_series(const std::string& path,
                 const std::vector<std::vector<double>>& series,
                 const std::vector<std::string>& labels, int width = 640,
                 int height = 400, bool log_y = false);

// Scatter/polyline overlay of an m x 2 pixel trajectory on a video frame
// (e.g. localized coordinates over the background).
void plot_trajectory(const std::string& path, const synth::Frame& background,
                     const Eigen::MatrixXd& pixel_coords);

}  // namespace vid2ode::plot
