#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "vid2ode/transform.hpp"

using namespace vid2ode;
using xform::TransformParams;
using xform::Vec2;

namespace {

TransformParams sample_params() {
  TransformParams p;
  p.log_s = -2.7;
  p.t << 31.4, 29.8;
  return p;
}

}  // namespace

TEST_CASE("round trip is the identity") {
  TransformParams p = sample_params();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 64.0);
  for (int i = 0; i < 50; ++i) {
    Vec2 xs(u(rng), u(rng));
    CHECK((p.to_spatial(p.to_physical(xs)) - xs).norm() < 1e-10);
    CHECK((p.to_physical(p.to_spatial(xs)) - xs).norm() < 1e-10);
  }
}

TEST_CASE("both directions share one parameter set") {
  TransformParams p = sample_params();
  Vec2 xs(10.0, 20.0);
  Vec2 before = p.to_physical(xs);
  p.log_s += 0.5;
  p.t[0] -= 3.0;
  Vec2 after = p.to_physical(xs);
  CHECK((before - after).norm() > 1e-3);  // mutation visible in T
  // ... and the mutated inverse still inverts the mutated forward.
  CHECK((p.to_spatial(after) - xs).norm() < 1e-10);
}

TEST_CASE("transform is affine") {
  TransformParams p = sample_params();
  Vec2 a(5.0, 40.0), b(55.0, 12.0);
  for (double lam : {-0.5, 0.0, 0.3, 1.0, 1.7}) {
    Vec2 mix = lam * a + (1.0 - lam) * b;
    Vec2 want = lam * p.to_physical(a) + (1.0 - lam) * p.to_physical(b);
    CHECK((p.to_physical(mix) - want).norm() < 1e-12);
  }
}

TEST_CASE("velocities transform by s Q") {
  TransformParams p = sample_params();
  const double dt = 0.01;
  const int n = 11;
  Eigen::MatrixXd xs(n, 2), xp(n, 2);
  for (int k = 0; k < n; ++k) {
    double t = k * dt;
    xs(k, 0) = 30.0 + 8.0 * std::sin(3.0 * t);
    xs(k, 1) = 25.0 + 5.0 * std::cos(2.0 * t);
    xp.row(k) = p.to_physical(xs.row(k)).transpose();
  }
  Eigen::Matrix2d sq = p.s() * p.rotation();
  for (int k = 1; k < n - 1; ++k) {
    Vec2 vs = (xs.row(k + 1) - xs.row(k - 1)).transpose() / (2 * dt);
    Vec2 vp = (xp.row(k + 1) - xp.row(k - 1)).transpose() / (2 * dt);
    CHECK((vp - sq * vs).norm() < 1e-9);
  }
}

TEST_CASE("vjps match finite differences") {
  TransformParams p = sample_params();
  Vec2 xs(13.37, 41.2);
  Vec2 w(0.7, -1.2);  // arbitrary output adjoint

  auto scalar_out = [&](const TransformParams& q, const Vec2& in, bool fwd) {
    Vec2 o = fwd ? q.to_physical(in) : q.to_spatial(in);
    return w.dot(o);
  };

  const double h = 1e-6;
  for (bool fwd : {true, false}) {
    Vec2 in = fwd ? xs : p.to_physical(xs);
    Vec2 in_bar = Vec2::Zero(), t_bar = Vec2::Zero();
    double ls_bar = 0.0;
    if (fwd)
      p.to_physical_vjp(in, w, &in_bar, &ls_bar, &t_bar);
    else
      p.to_spatial_vjp(in, w, &in_bar, &ls_bar, &t_bar);

    for (int i = 0; i < 2; ++i) {
      Vec2 ip = in, im = in;
      ip[i] += h;
      im[i] -= h;
      double fd = (scalar_out(p, ip, fwd) - scalar_out(p, im, fwd)) / (2 * h);
      CHECK(in_bar[i] == doctest::Approx(fd).epsilon(1e-6));

      TransformParams qp = p, qm = p;
      qp.t[i] += h;
      qm.t[i] -= h;
      fd = (scalar_out(qp, in, fwd) - scalar_out(qm, in, fwd)) / (2 * h);
      CHECK(t_bar[i] == doctest::Approx(fd).epsilon(1e-6));
    }
    TransformParams qp = p, qm = p;
    qp.log_s += h;
    qm.log_s -= h;
    double fd = (scalar_out(qp, in, fwd) - scalar_out(qm, in, fwd)) / (2 * h);
    CHECK(ls_bar == doctest::Approx(fd).epsilon(1e-6));
  }
}
