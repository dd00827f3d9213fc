#include "vid2ode/decoder.hpp"

#include <cmath>

#include "vid2ode/kernels.hpp"
#include "vid2ode/util.hpp"

namespace vid2ode::sprite {

DecoderParams::DecoderParams(int res)
    : resolution(res),
      content_logits(res, res, 3),
      mask_logits(res, res, 1),
      bg_logits(res, res, 3) {}

void DecoderGrads::add(const DecoderGrads& other) {
  kernels::axpy(1.0, other.content.v.data(), content.v.data(), content.v.size());
  kernels::axpy(1.0, other.mask.v.data(), mask.v.data(), mask.v.size());
  kernels::axpy(1.0, other.bg.v.data(), bg.v.data(), bg.v.size());
}

void DecoderWorkspace::refresh(const DecoderParams& p) {
  params = &p;
  if (content.v.size() != p.content_logits.v.size()) {
    content = Image(p.resolution, p.resolution, 3);
    content_tanh = Image(p.resolution, p.resolution, 3);
    bg = Image(p.resolution, p.resolution, 3);
    bg_tanh = Image(p.resolution, p.resolution, 3);
  }
  kernels::tanh_squash(p.content_logits.v.data(), content.v.data(),
                       content_tanh.v.data(), p.content_logits.v.size());
  kernels::tanh_squash(p.bg_logits.v.data(), bg.v.data(), bg_tanh.v.data(),
                       p.bg_logits.v.size());
}

Eigen::Matrix<double, 2, 3> affine_forward_params(const Vec2& x_s, double s,
                                                  double theta, int resolution) {
  // Normalized translation putting the sprite center at x_s.
  const double H = resolution;
  double tx = 2.0 * x_s[0] / H - 1.0;
  double ty = 2.0 * x_s[1] / H - 1.0;
  Eigen::Matrix<double, 2, 3> a;
  a << s * std::cos(theta), s * std::sin(theta), tx,
      -s * std::sin(theta), s * std::cos(theta), ty;
  return a;
}

Eigen::Matrix<double, 2, 3> affine_inverse_params(const Vec2& x_s, double s,
                                                  double theta, int resolution) {
  if (s <= 0) throw Error("affine_inverse_params: scale must be positive");
  const double H = resolution;
  double tx = 2.0 * x_s[0] / H - 1.0;
  double ty = 2.0 * x_s[1] / H - 1.0;
  const double c = std::cos(theta), sn = std::sin(theta);
  Eigen::Matrix<double, 2, 3> a;
  a << c / s, -sn / s, (-tx * c + ty * sn) / s,
      sn / s, c / s, (-tx * sn - ty * c) / s;
  return a;
}

namespace {

// Bilinear corner decomposition of a source location in pixel units.
struct Tap {
  int r0, c0;       // top-left corner
  double fr, fc;    // fractional offsets
  // Corner weights: w00=(1-fr)(1-fc), w01=(1-fr)fc, w10=fr(1-fc), w11=fr*fc
};

inline Tap make_tap(double px, double py) {
  double fc0 = std::floor(px), fr0 = std::floor(py);
  return {static_cast<int>(fr0), static_cast<int>(fc0), py - fr0, px - fc0};
}

inline bool in_bounds(int r, int c, int h, int w) {
  return r >= 0 && r < h && c >= 0 && c < w;
}

// Gather one channel with constant pad.
inline double gather(const Image& img, const Tap& t, int ch, double pad) {
  auto val = [&](int r, int c) {
    return in_bounds(r, c, img.h, img.w) ? img.at(r, c, ch) : pad;
  };
  double v00 = val(t.r0, t.c0), v01 = val(t.r0, t.c0 + 1);
  double v10 = val(t.r0 + 1, t.c0), v11 = val(t.r0 + 1, t.c0 + 1);
  double top = v00 + t.fc * (v01 - v00);
  double bot = v10 + t.fc * (v11 - v10);
  return top + t.fr * (bot - top);
}

// Spatial derivatives of the bilinear gather w.r.t. (px, py).
inline void gather_grad(const Image& img, const Tap& t, int ch, double pad,
                        double* dpx, double* dpy) {
  auto val = [&](int r, int c) {
    return in_bounds(r, c, img.h, img.w) ? img.at(r, c, ch) : pad;
  };
  double v00 = val(t.r0, t.c0), v01 = val(t.r0, t.c0 + 1);
  double v10 = val(t.r0 + 1, t.c0), v11 = val(t.r0 + 1, t.c0 + 1);
  *dpx = (1.0 - t.fr) * (v01 - v00) + t.fr * (v11 - v10);
  *dpy = (1.0 - t.fc) * (v10 - v00) + t.fc * (v11 - v01);
}

// Scatter a value into the 4 bilinear corners (in-bounds corners only).
inline void scatter(Image& img, const Tap& t, int ch, double g) {
  auto add = [&](int r, int c, double w) {
    if (in_bounds(r, c, img.h, img.w)) img.at(r, c, ch) += w * g;
  };
  add(t.r0, t.c0, (1.0 - t.fr) * (1.0 - t.fc));
  add(t.r0, t.c0 + 1, (1.0 - t.fr) * t.fc);
  add(t.r0 + 1, t.c0, t.fr * (1.0 - t.fc));
  add(t.r0 + 1, t.c0 + 1, t.fr * t.fc);
}

// Source pixel location of output pixel (row r, col c) under the normalized
// affine a, plus the constant Jacobian d(px,py)/d(x_s).
struct Grid {
  Eigen::Matrix<double, 2, 3> a;
  int H;
  // d(px,py)/d(x_s): constant over the grid.
  double dpx_dxsx, dpx_dxsy, dpy_dxsx, dpy_dxsy;

  Grid(const Vec2& x_s, double s, double theta, int resolution)
      : a(affine_inverse_params(x_s, s, theta, resolution)), H(resolution) {
    // src_norm = (1/s) Q_f (out_norm - t_norm) with t_norm = 2 x_s / H - 1,
    // so d src_px / d x_s = -(H/2) * (1/s) Q_f * (2/H) = -(1/s) Q_f.
    const double c = std::cos(theta), sn = std::sin(theta);
    dpx_dxsx = -c / s;
    dpx_dxsy = sn / s;
    dpy_dxsx = -sn / s;
    dpy_dxsy = -c / s;
  }

  inline void source(int r, int c, double* px, double* py) const {
    double u = 2.0 * (c + 0.5) / H - 1.0;
    double v = 2.0 * (r + 0.5) / H - 1.0;
    double us = a(0, 0) * u + a(0, 1) * v + a(0, 2);
    double vs = a(1, 0) * u + a(1, 1) * v + a(1, 2);
    *px = (us + 1.0) * 0.5 * H - 0.5;
    *py = (vs + 1.0) * 0.5 * H - 0.5;
  }
};

inline double mask_weight(double mask_logit) {
  // softmax over (m, 1): weight of the sprite branch.
  return 1.0 / (1.0 + std::exp(1.0 - mask_logit));
}

}  // namespace

Image st_sample(const Image& image, const Eigen::Matrix<double, 2, 3>& params,
                double pad) {
  Image out(image.h, image.w, image.c);
  const int H = image.h;
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < image.w; ++c) {
      double u = 2.0 * (c + 0.5) / image.w - 1.0;
      double v = 2.0 * (r + 0.5) / H - 1.0;
      double us = params(0, 0) * u + params(0, 1) * v + params(0, 2);
      double vs = params(1, 0) * u + params(1, 1) * v + params(1, 2);
      double px = (us + 1.0) * 0.5 * image.w - 0.5;
      double py = (vs + 1.0) * 0.5 * H - 0.5;
      Tap t = make_tap(px, py);
      for (int ch = 0; ch < image.c; ++ch)
        out.at(r, c, ch) = gather(image, t, ch, pad);
    }
  }
  return out;
}

Image composite(const Image& sampled_content, const Image& sampled_mask_logits,
                const Image& background) {
  if (sampled_content.h != background.h || sampled_content.w != background.w)
    throw Error("composite: shape mismatch");
  Image out(background.h, background.w, background.c);
  for (int r = 0; r < out.h; ++r) {
    for (int c = 0; c < out.w; ++c) {
      double w = mask_weight(sampled_mask_logits.at(r, c, 0));
      for (int ch = 0; ch < out.c; ++ch)
        out.at(r, c, ch) = w * sampled_content.at(r, c, ch) +
                           (1.0 - w) * background.at(r, c, ch);
    }
  }
  return out;
}

Image decode(const Vec2& x_s, const DecoderWorkspace& ws) {
  const DecoderParams& p = *ws.params;
  Grid grid(x_s, p.scale, p.angle, p.resolution);
  Image out(p.resolution, p.resolution, 3);
  for (int r = 0; r < out.h; ++r) {
    for (int c = 0; c < out.w; ++c) {
      double px, py;
      grid.source(r, c, &px, &py);
      Tap t = make_tap(px, py);
      double m = gather(p.mask_logits, t, 0, kMaskPadLogit);
      double w = mask_weight(m);
      for (int ch = 0; ch < 3; ++ch) {
        double ct = gather(ws.content, t, ch, 0.0);
        out.at(r, c, ch) = w * ct + (1.0 - w) * ws.bg.at(r, c, ch);
      }
    }
  }
  return out;
}

double decode_mse(const Vec2& x_s, const synth::Frame& target,
                  const DecoderWorkspace& ws, double weight, Vec2* x_s_bar,
                  DecoderGrads* grads) {
  const DecoderParams& p = *ws.params;
  const int H = p.resolution;
  if (target.h != H || target.w != H) throw Error("decode_mse: frame size mismatch");
  Grid grid(x_s, p.scale, p.angle, H);
  const double npix = static_cast<double>(H) * H * 3;
  const double gscale = 2.0 * weight / npix;
  double loss = 0.0;
  double dxsx = 0.0, dxsy = 0.0;

  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < H; ++c) {
      double px, py;
      grid.source(r, c, &px, &py);
      Tap t = make_tap(px, py);
      double m = gather(p.mask_logits, t, 0, kMaskPadLogit);
      double w = mask_weight(m);
      double dpx = 0.0, dpy = 0.0;
      double dm_acc = 0.0;
      for (int ch = 0; ch < 3; ++ch) {
        double ct = gather(ws.content, t, ch, 0.0);
        double bg = ws.bg.at(r, c, ch);
        double out = w * ct + (1.0 - w) * bg;
        double e = out - static_cast<double>(target.at(r, c, ch));
        loss += e * e;
        if (!grads && !x_s_bar) continue;
        double g = gscale * e;
        if (grads) {
          // d out / d bg logit through the squash.
          double tb = ws.bg_tanh.at(r, c, ch);
          grads->bg.at(r, c, ch) += g * (1.0 - w) * 0.5 * (1.0 - tb * tb);
          // Content gradient: scatter through bilinear corners and squash.
          auto add_corner = [&](int rr, int cc, double wgt) {
            if (!in_bounds(rr, cc, H, H)) return;
            double tc = ws.content_tanh.at(rr, cc, ch);
            grads->content.at(rr, cc, ch) += wgt * g * w * 0.5 * (1.0 - tc * tc);
          };
          add_corner(t.r0, t.c0, (1.0 - t.fr) * (1.0 - t.fc));
          add_corner(t.r0, t.c0 + 1, (1.0 - t.fr) * t.fc);
          add_corner(t.r0 + 1, t.c0, t.fr * (1.0 - t.fc));
          add_corner(t.r0 + 1, t.c0 + 1, t.fr * t.fc);
        }
        dm_acc += g * (ct - bg);
        if (x_s_bar) {
          double dcx, dcy;
          gather_grad(ws.content, t, ch, 0.0, &dcx, &dcy);
          dpx += g * w * dcx;
          dpy += g * w * dcy;
        }
      }
      if (grads || x_s_bar) {
        double dm = dm_acc * w * (1.0 - w);
        if (grads) scatter(grads->mask, t, 0, dm);
        if (x_s_bar) {
          double dmx, dmy;
          gather_grad(p.mask_logits, t, 0, kMaskPadLogit, &dmx, &dmy);
          dpx += dm * dmx;
          dpy += dm * dmy;
          dxsx += dpx * grid.dpx_dxsx + dpy * grid.dpy_dxsx;
          dxsy += dpx * grid.dpx_dxsy + dpy * grid.dpy_dxsy;
        }
      }
    }
  }
  if (x_s_bar) {
    (*x_s_bar)[0] += dxsx;
    (*x_s_bar)[1] += dxsy;
  }
  return weight * loss / npix;
}

}  // namespace vid2ode::sprite
