#pragma once

#include <array>

#include <Eigen/Dense>

#include "vid2ode/png_io.hpp"

namespace vid2ode::sprite {

using Vec2 = Eigen::Vector2d;

// Row-major H x W x C double image.
struct Image {
  int h = 0, w = 0, c = 0;
  std::vector<double> v;

  Image() = default;
  Image(int h_, int w_, int c_)
      : h(h_), w(w_), c(c_), v(static_cast<std::size_t>(h_) * w_ * c_, 0.0) {}
  double& at(int r, int col, int ch) {
    return v[(static_cast<std::size_t>(r) * w + col) * c + ch];
  }
  double at(int r, int col, int ch) const {
    return v[(static_cast<std::size_t>(r) * w + col) * c + ch];
  }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

// Out-of-bounds sampling pads: content fades to 0, mask logits to a strongly
// object-absent value, so sprites sliding off-frame blend to background.
inline constexpr double kMaskPadLogit = -10.0;

// Directly learnable decoder parameters. Content and background logits pass
// through (tanh+1)/2 into [0,1] before compositing; the background mask is
// the constant all-ones map and is never learnable.
struct DecoderParams {
  int resolution = 64;
  Image content_logits;  // H x W x 3
  Image mask_logits;     // H x W x 1
  Image bg_logits;       // H x W x 3
  double scale = 1.0;    // fixed
  double angle = 0.0;    // fixed

  explicit DecoderParams(int resolution = 64);
};

struct DecoderGrads {
  Image content, mask, bg;
  explicit DecoderGrads(int resolution = 64)
      : content(resolution, resolution, 3),
        mask(resolution, resolution, 1),
        bg(resolution, resolution, 3) {}
  void zero() {
    content.zero();
    mask.zero();
    bg.zero();
  }
  void add(const DecoderGrads& other);
};

// Squashed maps plus cached tanh values; recompute once per optimizer step,
// reuse across every frame decoded under the same parameters.
struct DecoderWorkspace {
  Image content;       // squashed, H x W x 3
  Image content_tanh;  // tanh of logits
  Image bg;
  Image bg_tanh;
  const DecoderParams* params = nullptr;

  void refresh(const DecoderParams& p);
};

// 2x3 inverse-affine sampler matrix of the spatial transformer, in [-1,1]
// normalized coordinates, with the translation chosen so the sprite center
// lands at pixel coordinate x_s.
Eigen::Matrix<double, 2, 3> affine_inverse_params(const Vec2& x_s, double s,
                                                  double theta, int resolution);
// Forward (object-placing) affine of which the above is the inverse.
Eigen::Matrix<double, 2, 3> affine_forward_params(const Vec2& x_s, double s,
                                                  double theta, int resolution);

// Bilinear sampling of `image` on the affine grid; out-of-bounds source
// locations contribute `pad` in every channel.
Image st_sample(const Image& image, const Eigen::Matrix<double, 2, 3>& params,
                double pad);

// Per-pixel two-way softmax over (mask logit, 1) blending sprite over
// background.
Image composite(const Image& sampled_content, const Image& sampled_mask_logits,
                const Image& background);

// Full decode: sample squashed content and raw mask logits at x_s, composite
// over the squashed background.
Image decode(const Vec2& x_s, const DecoderWorkspace& ws);

// Fused decode + mean-per-pixel squared error against an 8-bit-sourced frame,
// with reverse-mode accumulation into the decoder gradients and dL/dx_s.
// `weight` scales the loss term (and its gradients). Pass null grads for a
// value-only evaluation.
double decode_mse(const Vec2& x_s, const synth::Frame& target,
                  const DecoderWorkspace& ws, double weight, Vec2* x_s_bar,
                  DecoderGrads* grads);

}  // namespace vid2ode::sprite
