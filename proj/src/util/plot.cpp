#include "vid2ode/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vid2ode/util.hpp"

namespace vid2ode::plot {

namespace {

const float kPalette[6][3] = {{0.12f, 0.47f, 0.71f}, {1.00f, 0.50f, 0.05f},
                              {0.17f, 0.63f, 0.17f}, {0.84f, 0.15f, 0.16f},
                              {0.58f, 0.40f, 0.74f}, {0.55f, 0.34f, 0.29f}};

void draw_line(synth::Frame& f, double x0, double y0, double x1, double y1,
               const float rgb[3]) {
  const int steps =
      std::max(1, static_cast<int>(std::ceil(std::hypot(x1 - x0, y1 - y0))));
  for (int i = 0; i <= steps; ++i) {
    double t = static_cast<double>(i) / steps;
    int c = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
    int r = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
    if (r < 0 || r >= f.h || c < 0 || c >= f.w) continue;
    for (int ch = 0; ch < 3; ++ch) f.at(r, c, ch) = rgb[ch];
  }
}

}  // namespace

void plot_series(const std::string& path,
                 const std::vector<std::vector<double>>& series,
                 const std::vector<std::string>& labels, int width, int height,
                 bool log_y) {
  (void)labels;  // legend omitted; series are color-coded in palette order
  synth::Frame img(height, width);
  std::fill(img.rgb.begin(), img.rgb.end(), 1.0f);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t max_len = 0;
  auto value = [&](double v) {
    if (log_y) return std::log10(std::max(v, 1e-300));
    return v;
  };
  for (const auto& s : series) {
    max_len = std::max(max_len, s.size());
    for (double v : s) {
      double y = value(v);
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
  }
  if (max_len < 2 || !std::isfinite(lo) || !std::isfinite(hi)) {
    synth::write_png(path, img);
    return;
  }
  if (hi - lo < 1e-12) hi = lo + 1.0;

  const double mx = 8.0, my = 8.0;
  auto px = [&](std::size_t i, std::size_t n) {
    return mx + (width - 2 * mx) * static_cast<double>(i) /
                    static_cast<double>(n - 1);
  };
  auto py = [&](double v) {
    return my + (height - 2 * my) * (1.0 - (value(v) - lo) / (hi - lo));
  };
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& data = series[s];
    if (data.size() < 2) continue;
    const float* rgb = kPalette[s % 6];
    for (std::size_t i = 0; i + 1 < data.size(); ++i)
      draw_line(img, px(i, data.size()), py(data[i]), px(i + 1, data.size()),
                py(data[i + 1]), rgb);
  }
  synth::write_png(path, img);
}

void plot_trajectory(const std::string& path, const synth::Frame& background,
                     const Eigen::MatrixXd& pixel_coords) {
  synth::Frame img = background;
  for (Eigen::Index k = 0; k + 1 < pixel_coords.rows(); ++k)
    draw_line(img, pixel_coords(k, 0), pixel_coords(k, 1),
              pixel_coords(k + 1, 0), pixel_coords(k + 1, 1), kPalette[3]);
  synth::write_png(path, img);
}

}  // namespace vid2ode::plot
