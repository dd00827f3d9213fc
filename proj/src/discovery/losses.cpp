#include "vid2ode/losses.hpp"

#include <atomic>
#include <cmath>

#include "vid2ode/rk4.hpp"
#include "vid2ode/util.hpp"

namespace vid2ode::discovery {

namespace {

std::atomic<std::uint64_t> g_recon_calls{0};
std::atomic<std::uint64_t> g_xdot_calls{0};
std::atomic<std::uint64_t> g_int_calls{0};

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

// The identified vector field: Theta(z) * Xi, with the kinematic rows
// (dx/dt = u, dy/dt = v) structural when order == 2.
struct Flow {
  const features::LibrarySpec* lib;
  const features::CoefficientMatrix* xi;
  int order;
  mutable VectorXd theta;
  mutable MatrixXd gtheta;

  Flow(const DiscoveryModel& m)
      : lib(&m.lib), xi(&m.xi), order(m.order), theta(m.lib.n_terms()),
        gtheta(m.lib.n_terms(), m.state_dim()) {}

  int dim() const { return order == 2 ? 4 : 2; }

  VectorXd operator()(const VectorXd& z) const {
    features::evaluate_row(*lib, z.data(), theta.data());
    VectorXd dz(dim());
    Vector2d eq = xi->values.transpose() * theta;
    if (order == 2) {
      dz[0] = z[2];
      dz[1] = z[3];
      dz[2] = eq[0];
      dz[3] = eq[1];
    } else {
      dz[0] = eq[0];
      dz[1] = eq[1];
    }
    return dz;
  }

  // w is the adjoint of the output; accumulates J^T w into z_bar and the
  // coefficient adjoints into xi_bar (active, unpinned entries only).
  void vjp(const VectorXd& z, const VectorXd& w, VectorXd& z_bar,
           MatrixXd* xi_bar) const {
    Vector2d weq;
    if (order == 2) {
      z_bar[2] += w[0];
      z_bar[3] += w[1];
      weq << w[2], w[3];
    } else {
      weq << w[0], w[1];
    }
    features::evaluate_row(*lib, z.data(), theta.data());
    features::evaluate_row_grad(*lib, z.data(), gtheta);
    VectorXd a = xi->values * weq;  // n_terms
    z_bar.noalias() += gtheta.transpose() * a;
    if (xi_bar) {
      const int n = xi->n_terms();
      for (int t = 0; t < n; ++t)
        for (int c = 0; c < 2; ++c)
          if (xi->active(t, c) && !xi->is_pinned(t, c))
            (*xi_bar)(t, c) += theta[t] * weq[c];
    }
  }
};

// Reverse-mode through one RK4 step by stage recomputation. Returns the
// adjoint of the input state given the adjoint of the output state.
VectorXd rk4_step_vjp(const Flow& f, const VectorXd& x, double h,
                      const VectorXd& out_bar, MatrixXd* xi_bar) {
  VectorXd k1 = f(x);
  VectorXd x2 = x + 0.5 * h * k1;
  VectorXd k2 = f(x2);
  VectorXd x3 = x + 0.5 * h * k2;
  VectorXd k3 = f(x3);
  VectorXd x4 = x + h * k3;

  VectorXd x_bar = out_bar;
  VectorXd k1_bar = (h / 6.0) * out_bar;
  VectorXd k2_bar = (h / 3.0) * out_bar;
  VectorXd k3_bar = (h / 3.0) * out_bar;
  VectorXd k4_bar = (h / 6.0) * out_bar;

  VectorXd x4_bar = VectorXd::Zero(x.size());
  f.vjp(x4, k4_bar, x4_bar, xi_bar);
  x_bar += x4_bar;
  k3_bar += h * x4_bar;

  VectorXd x3_bar = VectorXd::Zero(x.size());
  f.vjp(x3, k3_bar, x3_bar, xi_bar);
  x_bar += x3_bar;
  k2_bar += 0.5 * h * x3_bar;

  VectorXd x2_bar = VectorXd::Zero(x.size());
  f.vjp(x2, k2_bar, x2_bar, xi_bar);
  x_bar += x2_bar;
  k1_bar += 0.5 * h * x2_bar;

  f.vjp(x, k1_bar, x_bar, xi_bar);
  return x_bar;
}

bool state_ok(const VectorXd& z) {
  if (!z.allFinite()) return false;
  return z.cwiseAbs().maxCoeff() <= kRolloutStateBound;
}

}  // namespace

LossCallCounts loss_call_counts() {
  return {g_recon_calls.load(), g_xdot_calls.load(), g_int_calls.load()};
}

void reset_loss_call_counts() {
  g_recon_calls = 0;
  g_xdot_calls = 0;
  g_int_calls = 0;
}

double loss_recon(const DiscoveryModel& m, const sprite::DecoderWorkspace& ws,
                  const synth::Video& video, int vi, VideoGrads* g) {
  ++g_recon_calls;
  const auto& coords = m.coords[vi];
  const int n = static_cast<int>(video.frames.size());
  const double w = 1.0 / n;
  double loss = 0.0;
  for (int k = 0; k < n; ++k) {
    // Composed round trip T_tilde(T(x_s)) is the identity for any transform
    // parameters; it is kept in the graph so the (exactly canceling)
    // transform gradients exist, as the loss is defined through x_p.
    Vector2d xs = coords.row(k);
    Vector2d xp = m.xf.to_physical(xs);
    Vector2d xs2 = m.xf.to_spatial(xp);
    Vector2d xs2_bar = Vector2d::Zero();
    loss += sprite::decode_mse(
        xs2, video.frames[k], ws, w, g ? &xs2_bar : nullptr,
        g && g->want_decoder ? &g->dec : nullptr);
    if (g) {
      Vector2d xp_bar = Vector2d::Zero();
      m.xf.to_spatial_vjp(xp, xs2_bar, &xp_bar, &g->log_s, &g->t);
      Vector2d xs_bar = Vector2d::Zero();
      m.xf.to_physical_vjp(xs, xp_bar, &xs_bar, &g->log_s, &g->t);
      g->coords.row(k) += xs_bar.transpose();
    }
  }
  return loss;
}

double loss_xdot(const DiscoveryModel& m, int vi, VideoGrads* g,
                 double grad_scale) {
  ++g_xdot_calls;
  if (g && grad_scale <= 0.0) throw Error("loss_xdot: grad_scale must be > 0");
  const auto& coords = m.coords[vi];
  const int n = static_cast<int>(coords.rows());
  const int min_frames = m.order == 2 ? 5 : 3;
  if (n < min_frames) throw Error("loss_xdot: too few frames");
  const double inv2dt = 1.0 / (2.0 * m.dt);
  const int n_terms = m.lib.n_terms();

  MatrixXd xp(n, 2);
  for (int k = 0; k < n; ++k)
    xp.row(k) = m.xf.to_physical(coords.row(k)).transpose();

  MatrixXd dxp = MatrixXd::Zero(n, 2);
  VectorXd theta(n_terms);
  MatrixXd gtheta(n_terms, m.state_dim());
  double loss = 0.0;

  if (m.order == 1) {
    const int N = n - 2;
    for (int k = 1; k <= n - 2; ++k) {
      Vector2d xpk = xp.row(k);  // contiguous copy; xp rows are strided
      features::evaluate_row(m.lib, xpk.data(), theta.data());
      Vector2d pred = m.xi.values.transpose() * theta;
      Vector2d r = (xp.row(k + 1) - xp.row(k - 1)).transpose() * inv2dt - pred;
      loss += r.squaredNorm();
      if (g) {
        Vector2d rb = (grad_scale * 2.0 / N) * r;
        dxp.row(k + 1) += rb.transpose() * inv2dt;
        dxp.row(k - 1) -= rb.transpose() * inv2dt;
        for (int t = 0; t < n_terms; ++t)
          for (int c = 0; c < 2; ++c)
            if (m.xi.active(t, c) && !m.xi.is_pinned(t, c))
              g->xi(t, c) -= theta[t] * rb[c];
        features::evaluate_row_grad(m.lib, xpk.data(), gtheta);
        VectorXd a = m.xi.values * rb;
        dxp.row(k) -= (gtheta.transpose() * a).transpose();
      }
    }
    loss /= N;
  } else {
    MatrixXd v = MatrixXd::Zero(n, 2);   // valid rows 1..n-2
    MatrixXd dv = MatrixXd::Zero(n, 2);
    for (int k = 1; k <= n - 2; ++k)
      v.row(k) = (xp.row(k + 1) - xp.row(k - 1)) * inv2dt;
    const int N = n - 4;
    VectorXd z(4);
    for (int k = 2; k <= n - 3; ++k) {
      z << xp(k, 0), xp(k, 1), v(k, 0), v(k, 1);
      features::evaluate_row(m.lib, z.data(), theta.data());
      Vector2d pred = m.xi.values.transpose() * theta;
      Vector2d r = (v.row(k + 1) - v.row(k - 1)).transpose() * inv2dt - pred;
      loss += r.squaredNorm();
      if (g) {
        Vector2d rb = (grad_scale * 2.0 / N) * r;
        dv.row(k + 1) += rb.transpose() * inv2dt;
        dv.row(k - 1) -= rb.transpose() * inv2dt;
        for (int t = 0; t < n_terms; ++t)
          for (int c = 0; c < 2; ++c)
            if (m.xi.active(t, c) && !m.xi.is_pinned(t, c))
              g->xi(t, c) -= theta[t] * rb[c];
        features::evaluate_row_grad(m.lib, z.data(), gtheta);
        VectorXd a = m.xi.values * rb;
        VectorXd zb = gtheta.transpose() * a;
        dxp.row(k) -= zb.head<2>().transpose();
        dv.row(k) -= zb.tail<2>().transpose();
      }
    }
    loss /= N;
    if (g)
      for (int k = 1; k <= n - 2; ++k) {
        dxp.row(k + 1) += dv.row(k) * inv2dt;
        dxp.row(k - 1) -= dv.row(k) * inv2dt;
      }
  }

  if (g)
    for (int k = 0; k < n; ++k) {
      Vector2d xp_bar = dxp.row(k);
      if (xp_bar.isZero(0.0)) continue;
      Vector2d xs_bar = Vector2d::Zero();
      m.xf.to_physical_vjp(coords.row(k), xp_bar, &xs_bar, &g->log_s, &g->t);
      g->coords.row(k) += xs_bar.transpose();
    }
  return loss;
}

double loss_int(const DiscoveryModel& m, const sprite::DecoderWorkspace& ws,
                const synth::Video& video, int vi, int q, VideoGrads* g,
                int* clamped_rollouts, double grad_scale) {
  ++g_int_calls;
  if (q < 1) throw Error("loss_int: q must be >= 1");
  if (g && grad_scale <= 0.0) throw Error("loss_int: grad_scale must be > 0");
  const auto& coords = m.coords[vi];
  const int n = static_cast<int>(video.frames.size());
  if (n < 2 * q + 1) throw Error("loss_int: too few frames for q");
  const int dim = m.state_dim();
  const double inv2dt = 1.0 / (2.0 * m.dt);
  const int anchor_lo = q;
  const int anchor_hi = n - 1 - q;
  const int n_anchors = anchor_hi - anchor_lo + 1;
  const double weight = 1.0 / (static_cast<double>(n_anchors) * (2 * q + 1));

  Flow flow(m);
  MatrixXd dxp = MatrixXd::Zero(n, 2);  // physical-coordinate adjoints
  double loss = 0.0;
  int clamped = 0;

  // Decode one rollout state against a true frame; position components only
  // feed the decoder. Returns the weighted squared error; adjoints (when
  // training) land in z_bar's position part and the shared decoder grads.
  auto dec_term = [&](const VectorXd& z, int frame, VectorXd* z_bar) {
    Vector2d pos(z[0], z[1]);
    Vector2d xs2 = m.xf.to_spatial(pos);
    if (!g)
      return sprite::decode_mse(xs2, video.frames[frame], ws, weight, nullptr,
                                nullptr);
    // decode_mse couples value and adjoint through one weight, so run it at
    // weight * grad_scale and recover the unscaled value by division.
    Vector2d xs2_bar = Vector2d::Zero();
    double l = sprite::decode_mse(xs2, video.frames[frame], ws,
                                  weight * grad_scale, &xs2_bar,
                                  g->want_decoder ? &g->dec : nullptr);
    if (z_bar) {
      Vector2d pos_bar = Vector2d::Zero();
      m.xf.to_spatial_vjp(pos, xs2_bar, &pos_bar, &g->log_s, &g->t);
      (*z_bar)[0] += pos_bar[0];
      (*z_bar)[1] += pos_bar[1];
    }
    return l / grad_scale;
  };

  std::vector<VectorXd> chain(static_cast<std::size_t>(q) + 1);
  for (int k = anchor_lo; k <= anchor_hi; ++k) {
    VectorXd z0(dim);
    if (m.order == 1) {
      z0 = m.xf.to_physical(coords.row(k));
    } else {
      Vector2d p = m.xf.to_physical(coords.row(k));
      Vector2d pn = m.xf.to_physical(coords.row(k + 1));
      Vector2d pp = m.xf.to_physical(coords.row(k - 1));
      z0 << p[0], p[1], (pn[0] - pp[0]) * inv2dt, (pn[1] - pp[1]) * inv2dt;
    }

    VectorXd z0_bar = VectorXd::Zero(dim);
    loss += dec_term(z0, k, &z0_bar);

    for (int dir : {+1, -1}) {
      const double h = dir * m.dt;
      chain[0] = z0;
      int len = q;
      for (int i = 1; i <= q; ++i) {
        chain[i] = dyn::rk4_step_unchecked(flow, chain[i - 1], h);
        if (!state_ok(chain[i])) {
          len = i - 1;
          loss += kClampPenalty * weight * (q - len);
          clamped += q - len;
          break;
        }
      }
      VectorXd carry = VectorXd::Zero(dim);
      for (int i = len; i >= 1; --i) {
        VectorXd zi_bar = VectorXd::Zero(dim);
        loss += dec_term(chain[i], k + dir * i, &zi_bar);
        carry += zi_bar;
        if (g) carry = rk4_step_vjp(flow, chain[i - 1], h, carry, &g->xi);
      }
      if (g) z0_bar += carry;
    }

    if (g) {
      Vector2d pos_bar(z0_bar[0], z0_bar[1]);
      dxp.row(k) += pos_bar.transpose();
      if (m.order == 2) {
        Vector2d vel_bar(z0_bar[2], z0_bar[3]);
        dxp.row(k + 1) += vel_bar.transpose() * inv2dt;
        dxp.row(k - 1) -= vel_bar.transpose() * inv2dt;
      }
    }
  }

  if (g)
    for (int k = 0; k < n; ++k) {
      Vector2d xp_bar = dxp.row(k);
      if (xp_bar.isZero(0.0)) continue;
      Vector2d xs_bar = Vector2d::Zero();
      m.xf.to_physical_vjp(coords.row(k), xp_bar, &xs_bar, &g->log_s, &g->t);
      g->coords.row(k) += xs_bar.transpose();
    }
  if (clamped_rollouts) *clamped_rollouts += clamped;
  return loss;
}

LossTerms video_losses(const DiscoveryModel& m, const sprite::DecoderWorkspace& ws,
                       const synth::Video& video, int vi, const LossWeights& w,
                       VideoGrads* g) {
  LossTerms out;
  out.recon = loss_recon(m, ws, video, vi, g);
  out.xdot = loss_xdot(m, vi, w.lambda1 > 0 ? g : nullptr, w.lambda1);
  out.integral = loss_int(m, ws, video, vi, w.q, w.lambda2 > 0 ? g : nullptr,
                          &out.clamped_rollouts, w.lambda2);
  out.total = out.recon + w.lambda1 * out.xdot + w.lambda2 * out.integral;
  return out;
}

double loss_reg(const DiscoveryModel& m, double lambda3, Eigen::MatrixXd* xi_bar) {
  features::LHalfResult r = features::l_half(m.xi);
  if (xi_bar) *xi_bar += lambda3 * r.subgradient;
  return r.value;
}

Eigen::MatrixXd second_order_lift(const Eigen::MatrixXd& coords_p, double dt) {
  const int n = static_cast<int>(coords_p.rows());
  if (n < 3 || coords_p.cols() != 2)
    throw Error("second_order_lift: need an m x 2 trajectory with m >= 3");
  Eigen::MatrixXd out(n - 2, 4);
  const double inv2dt = 1.0 / (2.0 * dt);
  for (int k = 1; k <= n - 2; ++k) {
    out(k - 1, 0) = coords_p(k, 0);
    out(k - 1, 1) = coords_p(k, 1);
    out(k - 1, 2) = (coords_p(k + 1, 0) - coords_p(k - 1, 0)) * inv2dt;
    out(k - 1, 3) = (coords_p(k + 1, 1) - coords_p(k - 1, 1)) * inv2dt;
  }
  return out;
}

}  // namespace vid2ode::discovery
