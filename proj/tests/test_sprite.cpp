#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "vid2ode/decoder.hpp"
#include "vid2ode/render.hpp"

using namespace vid2ode;
using sprite::DecoderGrads;
using sprite::DecoderParams;
using sprite::DecoderWorkspace;
using sprite::Image;
using sprite::Vec2;

namespace {

constexpr int kRes = 16;

DecoderParams random_params(std::uint64_t seed) {
  DecoderParams p(kRes);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (auto& v : p.content_logits.v) v = u(rng);
  for (auto& v : p.mask_logits.v) v = u(rng);
  for (auto& v : p.bg_logits.v) v = u(rng);
  return p;
}

synth::Frame random_frame(std::uint64_t seed) {
  synth::Frame f(kRes, kRes);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  for (auto& v : f.rgb) v = u(rng);
  return f;
}

}  // namespace

TEST_CASE("workspace squash matches tanh and stays in range") {
  DecoderParams p = random_params(1);
  DecoderWorkspace ws;
  ws.refresh(p);
  for (std::size_t i = 0; i < p.content_logits.v.size(); ++i) {
    double want = (std::tanh(p.content_logits.v[i]) + 1.0) / 2.0;
    CHECK(ws.content.v[i] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("forward and inverse affine parameters compose to identity") {
  Vec2 xs(5.3, 9.1);
  auto fwd = sprite::affine_forward_params(xs, 0.8, 0.0, kRes);
  auto inv = sprite::affine_inverse_params(xs, 0.8, 0.0, kRes);
  Eigen::Matrix3d F = Eigen::Matrix3d::Identity(), I = Eigen::Matrix3d::Identity();
  F.topRows<2>() = fwd;
  I.topRows<2>() = inv;
  CHECK((F * I - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS(sprite::affine_inverse_params(xs, 0.0, 0.0, kRes));
}

TEST_CASE("identity grid sampling reproduces the image") {
  Image img(kRes, kRes, 3);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : img.v) v = u(rng);
  Eigen::Matrix<double, 2, 3> ident;
  ident << 1, 0, 0, 0, 1, 0;
  Image out = sprite::st_sample(img, ident, 0.0);
  for (std::size_t i = 0; i < img.v.size(); ++i)
    CHECK(out.v[i] == doctest::Approx(img.v[i]).epsilon(1e-12));
}

TEST_CASE("integer sprite translation shifts the decode by whole pixels") {
  DecoderParams p = random_params(3);
  DecoderWorkspace ws;
  ws.refresh(p);
  Vec2 a(6.0, 7.0), b(8.0, 7.0);  // +2 columns
  // Constant background isolates the sprite path: the composite at b is the
  // composite at a shifted right by two whole pixels.
  for (auto& v : p.bg_logits.v) v = 0.3;
  ws.refresh(p);
  Image da = sprite::decode(a, ws);
  Image db = sprite::decode(b, ws);
  for (int r = 0; r < kRes; ++r)
    for (int c = 0; c < kRes - 2; ++c)
      for (int ch = 0; ch < 3; ++ch)
        CHECK(db.at(r, c + 2, ch) == doctest::Approx(da.at(r, c, ch)).epsilon(1e-12));
}

TEST_CASE("decode output stays in [0,1] and off-frame sprites vanish") {
  DecoderParams p = random_params(4);
  DecoderWorkspace ws;
  ws.refresh(p);
  for (double x : {-30.0, 3.7, 8.0, 40.0}) {
    Image out = sprite::decode(Vec2(x, 7.3), ws);
    for (double v : out.v) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  // Sprite far outside: output is the background through the pad logit.
  Image far = sprite::decode(Vec2(-100.0, -100.0), ws);
  double pad_w = 1.0 / (1.0 + std::exp(1.0 - sprite::kMaskPadLogit));
  for (int r = 0; r < kRes; ++r)
    for (int c = 0; c < kRes; ++c)
      for (int ch = 0; ch < 3; ++ch)
        CHECK(std::abs(far.at(r, c, ch) - ws.bg.at(r, c, ch)) <= pad_w + 1e-12);
}

TEST_CASE("half-pixel offset splits a bilinear tap evenly") {
  Image img(4, 4, 1);
  img.at(1, 1, 0) = 1.0;  // impulse
  Eigen::Matrix<double, 2, 3> shift;  // sample at (c - 0.5, r) source pixels
  const double H = 4.0;
  shift << 1, 0, -0.5 * 2.0 / H, 0, 1, 0;
  Image out = sprite::st_sample(img, shift, 0.0);
  CHECK(out.at(1, 1, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.at(1, 2, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("decode_mse equals the mean squared decode error") {
  DecoderParams p = random_params(5);
  DecoderWorkspace ws;
  ws.refresh(p);
  synth::Frame target = random_frame(6);
  Vec2 xs(6.3, 9.7);
  Image out = sprite::decode(xs, ws);
  double want = 0.0;
  for (int r = 0; r < kRes; ++r)
    for (int c = 0; c < kRes; ++c)
      for (int ch = 0; ch < 3; ++ch) {
        double e = out.at(r, c, ch) - target.at(r, c, ch);
        want += e * e;
      }
  want /= kRes * kRes * 3;
  double got = sprite::decode_mse(xs, target, ws, 1.0, nullptr, nullptr);
  CHECK(got == doctest::Approx(want).epsilon(1e-12));
  CHECK(sprite::decode_mse(xs, target, ws, 2.5, nullptr, nullptr) ==
        doctest::Approx(2.5 * want).epsilon(1e-12));
}

TEST_CASE("decode_mse position gradient matches finite differences") {
  DecoderParams p = random_params(7);
  DecoderWorkspace ws;
  ws.refresh(p);
  synth::Frame target = random_frame(8);
  const double h = 1e-5;
  for (Vec2 xs : {Vec2(6.37, 9.71), Vec2(3.14, 12.9)}) {
    Vec2 g = Vec2::Zero();
    sprite::decode_mse(xs, target, ws, 1.0, &g, nullptr);
    for (int i = 0; i < 2; ++i) {
      Vec2 xp = xs, xm = xs;
      xp[i] += h;
      xm[i] -= h;
      double fd = (sprite::decode_mse(xp, target, ws, 1.0, nullptr, nullptr) -
                   sprite::decode_mse(xm, target, ws, 1.0, nullptr, nullptr)) /
                  (2 * h);
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("decode_mse logit gradients match finite differences") {
  DecoderParams p = random_params(9);
  DecoderWorkspace ws;
  ws.refresh(p);
  synth::Frame target = random_frame(10);
  Vec2 xs(7.21, 8.64);
  DecoderGrads g(kRes);
  sprite::decode_mse(xs, target, ws, 1.0, nullptr, &g);

  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> pick(4, 11);  // probes near the sprite
  const double h = 1e-6;
  auto probe = [&](Image& logits, const Image& grads, int ch) {
    int r = pick(rng), c = pick(rng);
    double save = logits.at(r, c, ch);
    logits.at(r, c, ch) = save + h;
    ws.refresh(p);
    double lp = sprite::decode_mse(xs, target, ws, 1.0, nullptr, nullptr);
    logits.at(r, c, ch) = save - h;
    ws.refresh(p);
    double lm = sprite::decode_mse(xs, target, ws, 1.0, nullptr, nullptr);
    logits.at(r, c, ch) = save;
    ws.refresh(p);
    double fd = (lp - lm) / (2 * h);
    double rel = std::abs(grads.at(r, c, ch) - fd) /
                 std::max({std::abs(fd), std::abs(grads.at(r, c, ch)), 1e-7});
    CHECK(rel <= 1e-4);
  };
  for (int i = 0; i < 8; ++i) {
    probe(p.content_logits, g.content, i % 3);
    probe(p.mask_logits, g.mask, 0);
    probe(p.bg_logits, g.bg, i % 3);
  }
}

TEST_CASE("decoder gradient accumulation adds elementwise") {
  DecoderGrads a(4), b(4);
  a.content.at(1, 2, 0) = 2.0;
  b.content.at(1, 2, 0) = -0.5;
  b.mask.at(0, 0, 0) = 3.0;
  a.add(b);
  CHECK(a.content.at(1, 2, 0) == doctest::Approx(1.5));
  CHECK(a.mask.at(0, 0, 0) == doctest::Approx(3.0));
}
