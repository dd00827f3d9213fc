#pragma once

#include <string>
#include <vector>

namespace vid2ode::synth {

// H x W x 3 interleaved RGB in [0,1].
struct Frame {
  int h = 0;
  int w = 0;
  std::vector<float> rgb;

  Frame() = default;
  Frame(int h_, int w_) : h(h_), w(w_), rgb(static_cast<std::size_t>(h_) * w_ * 3, 0.f) {}
  float& at(int row, int col, int ch) {
    return rgb[(static_cast<std::size_t>(row) * w + col) * 3 + ch];
  }
  float at(int row, int col, int ch) const {
    return rgb[(static_cast<std::size_t>(row) * w + col) * 3 + ch];
  }
};

// 8-bit RGB PNG, rounding to nearest level.
void write_png(const std::string& path, const Frame& frame);
Frame read_png(const std::string& path);

}  // namespace vid2ode::synth
