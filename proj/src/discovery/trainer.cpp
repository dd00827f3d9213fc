#include "vid2ode/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "vid2ode/adam.hpp"
#include "vid2ode/localize.hpp"
#include "vid2ode/param_set.hpp"
#include "vid2ode/util.hpp"

namespace vid2ode::discovery {

namespace {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

double clampd(double v, double lo, double hi) {
  return std::min(hi, std::max(lo, v));
}

struct EpochMode {
  bool physics = true;      // evaluate/backprop L_xdot, L_int, L_reg
  bool recon_grad = true;   // backprop L_recon
  bool decoder_grad = true; // accumulate decoder-map adjoints
};

struct Trainer {
  const synth::FramesOnlyDataset* ds = nullptr;
  TrainConfig cfg;
  AblationMode mode = AblationMode::none;
  DiscoveryModel m;
  grad::ParamSet ps;
  sprite::DecoderWorkspace ws;
  std::vector<VideoGrads> vg;
  VectorXd flat;
  std::vector<std::string> warnings;
  int clamped_total = 0;

  void setup(const synth::FramesOnlyDataset& data) {
    ds = &data;
    const int res = data.resolution;
    m.order = cfg.model_order;
    m.dt = cfg.dt;
    m.lib = features::build_library(cfg.model_order == 2 ? 4 : 2,
                                    cfg.library_degree);
    m.xi = features::CoefficientMatrix(m.lib.n_terms(), 2);
    m.xi.values.setConstant(0.1);
    m.decoder = sprite::DecoderParams(res);

    LocalizeResult loc = localize(data);
    for (auto& c : loc.coords)
      for (int i = 0; i < c.size(); ++i)
        c.data()[i] = clampd(c.data()[i], 0.0, res);
    m.coords = std::move(loc.coords);
    for (auto [v, k] : loc.empty_foreground)
      warnings.push_back("empty foreground in video " + std::to_string(v) +
                         " frame " + std::to_string(k));
    init_decoder(m.decoder, loc.background);

    ps.add("decoder/content", m.decoder.content_logits.v.data(),
           m.decoder.content_logits.v.size(), cfg.lr_mult_decoder);
    ps.add("decoder/mask", m.decoder.mask_logits.v.data(),
           m.decoder.mask_logits.v.size(), cfg.lr_mult_decoder);
    ps.add("decoder/bg", m.decoder.bg_logits.v.data(),
           m.decoder.bg_logits.v.size(), cfg.lr_mult_decoder);
    ps.add("xform/log_s", &m.xf.log_s, 1);
    ps.add("xform/t", m.xf.t.data(), 2);
    ps.add("xi", m.xi.values.data(),
           static_cast<std::size_t>(m.xi.values.size()), cfg.lr_mult_xi);
    for (std::size_t v = 0; v < m.coords.size(); ++v)
      ps.add("coords/" + std::to_string(v), m.coords[v].data(),
             static_cast<std::size_t>(m.coords[v].size()));

    for (std::size_t v = 0; v < m.coords.size(); ++v)
      vg.emplace_back(static_cast<int>(m.coords[v].rows()), res,
                      m.lib.n_terms(), 2);
    flat = VectorXd::Zero(static_cast<Eigen::Index>(ps.total_size()));
  }

  void init_transform_from_coords() {
    double n = 0.0;
    Vector2d mean = Vector2d::Zero();
    for (const auto& c : m.coords) {
      mean += c.colwise().sum().transpose();
      n += static_cast<double>(c.rows());
    }
    mean /= n;
    double ss = 0.0;
    for (const auto& c : m.coords)
      ss += (c.rowwise() - mean.transpose()).squaredNorm();
    double rms = std::sqrt(ss / (2.0 * n));
    if (rms <= 0) throw Error("degenerate trajectories: zero spatial spread");
    m.xf.t = mean;
    m.xf.log_s = -std::log(rms);
  }

  // Central-difference regression data for the current coordinates in the
  // current learned frame. False when there is too little data.
  bool build_cd_design(MatrixXd* X_out, MatrixXd* Xd_out) const {
    const int n_vars = m.order == 2 ? 4 : 2;
    std::vector<MatrixXd> xs, xd;
    const double inv2dt = 1.0 / (2.0 * m.dt);
    for (const auto& c : m.coords) {
      const int n = static_cast<int>(c.rows());
      if (n < (m.order == 2 ? 5 : 3)) continue;
      MatrixXd xp(n, 2);
      for (int k = 0; k < n; ++k)
        xp.row(k) = m.xf.to_physical(c.row(k)).transpose();
      MatrixXd state = m.order == 2 ? second_order_lift(xp, m.dt) : xp;
      const int r = static_cast<int>(state.rows());
      MatrixXd X(r - 2, n_vars), Xd(r - 2, 2);
      for (int k = 1; k <= r - 2; ++k) {
        X.row(k - 1) = state.row(k);
        Xd.row(k - 1) = (state.row(k + 1).rightCols(2) -
                         state.row(k - 1).rightCols(2)) *
                        inv2dt;
      }
      xs.push_back(std::move(X));
      xd.push_back(std::move(Xd));
    }
    Eigen::Index rows = 0;
    for (const auto& x : xs) rows += x.rows();
    if (rows < m.lib.n_terms()) return false;
    X_out->resize(rows, n_vars);
    Xd_out->resize(rows, 2);
    Eigen::Index r0 = 0;
    for (std::size_t v = 0; v < xs.size(); ++v) {
      X_out->middleRows(r0, xs[v].rows()) = xs[v];
      Xd_out->middleRows(r0, xs[v].rows()) = xd[v];
      r0 += xs[v].rows();
    }
    return true;
  }

  // Least-squares refit of the active unpinned coefficients against
  // central-difference derivatives of the current coordinates. Undoes the
  // shrinkage the l1/2 penalty accumulates between threshold events, so
  // pruning decisions see unbiased magnitudes. Never reactivates masked
  // terms. With the mask all-active this is the post-pretrain warm start.
  void refit_active_ls() {
    MatrixXd X, Xd;
    if (!build_cd_design(&X, &Xd)) return;  // too little data; keep values
    MatrixXd theta = features::evaluate(m.lib, X);
    for (int c = 0; c < m.xi.n_eqs(); ++c) {
      std::vector<int> js;
      for (int j = 0; j < m.xi.n_terms(); ++j)
        if (m.xi.active(j, c) && !m.xi.is_pinned(j, c)) js.push_back(j);
      if (js.empty()) continue;
      Eigen::VectorXd b = Xd.col(c);
      for (const auto& p : m.xi.pinned)
        if (p.col == c) b -= theta.col(p.row) * p.value;
      MatrixXd sub(theta.rows(), static_cast<Eigen::Index>(js.size()));
      for (std::size_t k = 0; k < js.size(); ++k)
        sub.col(static_cast<Eigen::Index>(k)) = theta.col(js[k]);
      Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(sub);
      Eigen::VectorXd w = cod.solve(b);
      for (std::size_t k = 0; k < js.size(); ++k)
        m.xi.values(js[k], c) = w[static_cast<Eigen::Index>(k)];
    }
    m.xi.enforce_mask();
  }

  void add_flat(const std::string& group, const double* src, std::size_t n,
                double scale) {
    double* dst = flat.data() + ps.offset_of(group);
    for (std::size_t i = 0; i < n; ++i) dst[i] += scale * src[i];
  }

  LossTerms step(const std::vector<int>& batch, const EpochMode& em) {
    ws.refresh(m.decoder);
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    std::vector<LossTerms> terms(batch.size());
    parallel_for(batch.size(), [&](std::size_t bi) {
      const int v = batch[bi];
      VideoGrads& g = vg[static_cast<std::size_t>(v)];
      g.coords.setZero();
      g.dec.zero();
      g.log_s = 0.0;
      g.t.setZero();
      g.xi.setZero();
      g.want_decoder = em.decoder_grad;
      LossTerms& t = terms[bi];
      const auto& video = ds->videos[static_cast<std::size_t>(v)];
      t.recon = loss_recon(m, ws, video, v, em.recon_grad ? &g : nullptr);
      if (em.physics) {
        if (cfg.lambda1 > 0)
          t.xdot = loss_xdot(m, v, &g, cfg.lambda1);
        if (cfg.lambda2 > 0)
          t.integral = loss_int(m, ws, video, v, cfg.q, &g,
                                &t.clamped_rollouts, cfg.lambda2);
      }
    });

    // Fixed reduction order: batch order, then group order.
    flat.setZero();
    LossTerms out;
    for (std::size_t bi = 0; bi < batch.size(); ++bi) {
      const int v = batch[bi];
      const VideoGrads& g = vg[static_cast<std::size_t>(v)];
      add_flat("decoder/content", g.dec.content.v.data(), g.dec.content.v.size(),
               inv_b);
      add_flat("decoder/mask", g.dec.mask.v.data(), g.dec.mask.v.size(), inv_b);
      add_flat("decoder/bg", g.dec.bg.v.data(), g.dec.bg.v.size(), inv_b);
      add_flat("xform/log_s", &g.log_s, 1, inv_b);
      add_flat("xform/t", g.t.data(), 2, inv_b);
      add_flat("xi", g.xi.data(), static_cast<std::size_t>(g.xi.size()), inv_b);
      add_flat("coords/" + std::to_string(v), g.coords.data(),
               static_cast<std::size_t>(g.coords.size()), inv_b);
      out.recon += terms[bi].recon * inv_b;
      out.xdot += terms[bi].xdot * inv_b;
      out.integral += terms[bi].integral * inv_b;
      out.clamped_rollouts += terms[bi].clamped_rollouts;
    }
    if (em.physics && cfg.lambda3 > 0) {
      MatrixXd xi_bar = MatrixXd::Zero(m.xi.n_terms(), 2);
      out.reg = loss_reg(m, cfg.lambda3, &xi_bar);
      add_flat("xi", xi_bar.data(), static_cast<std::size_t>(xi_bar.size()),
               1.0);
    } else if (em.physics) {
      out.reg = loss_reg(m, 0.0, nullptr);
    }
    out.total = out.recon + cfg.lambda1 * out.xdot + cfg.lambda2 * out.integral +
                cfg.lambda3 * out.reg;
    clamped_total += out.clamped_rollouts;
    return out;
  }

  void post_step() {
    m.xi.enforce_mask();
    const double hi = static_cast<double>(ds->resolution);
    for (auto& c : m.coords)
      for (int i = 0; i < c.size(); ++i)
        c.data()[i] = clampd(c.data()[i], 0.0, hi);
  }

  std::vector<std::vector<int>> batches() const {
    const int nv = static_cast<int>(ds->videos.size());
    const int b = cfg.batch_size > 0 ? std::min(cfg.batch_size, nv) : nv;
    std::vector<std::vector<int>> out;
    for (int s = 0; s < nv; s += b) {
      std::vector<int> one;
      for (int v = s; v < std::min(s + b, nv); ++v) one.push_back(v);
      out.push_back(std::move(one));
    }
    return out;
  }

  StageTrace run_stage(const std::string& name, int epochs, const EpochMode& em,
                       grad::Adam& adam, bool thresholding) {
    StageTrace trace{name, {}};
    LossTerms last_finite;
    for (int e = 0; e < epochs; ++e) {
      LossTerms mean;
      int n_steps = 0;
      for (const auto& b : batches()) {
        LossTerms t = step(b, em);
        if (!std::isfinite(t.total))
          throw Error("training diverged in stage " + name +
                      " (last finite: total=" + format_double(last_finite.total) +
                      " recon=" + format_double(last_finite.recon) + ")");
        last_finite = t;
        adam.step(ps, flat);
        post_step();
        mean.recon += t.recon;
        mean.xdot += t.xdot;
        mean.integral += t.integral;
        mean.reg += t.reg;
        mean.total += t.total;
        mean.clamped_rollouts += t.clamped_rollouts;
        ++n_steps;
      }
      mean.recon /= n_steps;
      mean.xdot /= n_steps;
      mean.integral /= n_steps;
      mean.reg /= n_steps;
      mean.total /= n_steps;
      trace.epochs.push_back(mean);
      if (thresholding && (e + 1) % cfg.threshold_interval == 0) {
        if (cfg.warm_start_xi) refit_active_ls();
        std::vector<int> degenerate = features::threshold(m.xi, cfg.tau);
        for (int c : degenerate)
          warnings.push_back("thresholding left equation " + std::to_string(c) +
                             " with no active terms");
      }
    }
    return trace;
  }

  LossTerms evaluate_all() {
    ws.refresh(m.decoder);
    LossTerms out;
    const int nv = static_cast<int>(ds->videos.size());
    std::vector<LossTerms> terms(static_cast<std::size_t>(nv));
    parallel_for(static_cast<std::size_t>(nv), [&](std::size_t v) {
      const auto& video = ds->videos[v];
      LossTerms& t = terms[v];
      t.recon = loss_recon(m, ws, video, static_cast<int>(v), nullptr);
      t.xdot = loss_xdot(m, static_cast<int>(v), nullptr);
      t.integral = loss_int(m, ws, video, static_cast<int>(v), cfg.q, nullptr,
                            &t.clamped_rollouts);
    });
    for (const auto& t : terms) {
      out.recon += t.recon / nv;
      out.xdot += t.xdot / nv;
      out.integral += t.integral / nv;
      out.clamped_rollouts += t.clamped_rollouts;
    }
    out.reg = loss_reg(m, 0.0, nullptr);
    out.total = out.recon + cfg.lambda1 * out.xdot + cfg.lambda2 * out.integral +
                cfg.lambda3 * out.reg;
    return out;
  }

  // Freeze-flag bookkeeping for the four stages.
  void freeze_for_pretrain() {
    ps.set_frozen("xi", true);
    ps.set_frozen("xform/log_s", true);
    ps.set_frozen("xform/t", true);
  }
  void unfreeze_for_total() {
    for (auto& g : ps.groups()) g.frozen = false;
    if (mode == AblationMode::no_transform) {
      ps.set_frozen("xform/log_s", true);
      ps.set_frozen("xform/t", true);
    }
  }
  void freeze_for_refine() {
    ps.freeze_all();
    ps.set_frozen("xi", false);
  }
};

}  // namespace

void TrainConfig::validate() const {
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0)
    throw ConfigError("loss weights must be nonnegative");
  if (q < 1) throw ConfigError("q must be >= 1");
  if (!(dt > 0)) throw ConfigError("dt must be positive");
  if (!(tau > 0)) throw ConfigError("threshold tau must be positive");
  if (threshold_interval < 1)
    throw ConfigError("threshold_interval must be >= 1");
  if (epochs_pretrain < 0 || epochs_total < 0 || epochs_threshold < 0 ||
      epochs_refine < 0)
    throw ConfigError("epoch counts must be nonnegative");
  if (!(lr > 0)) throw ConfigError("lr must be positive");
  if (model_order != 1 && model_order != 2)
    throw ConfigError("model_order must be 1 or 2");
  if (library_degree < 1) throw ConfigError("library_degree must be >= 1");
  if (batch_size < 0) throw ConfigError("batch_size must be >= 0");
  if (lr_mult_decoder <= 0 || lr_mult_xi <= 0)
    throw ConfigError("learning-rate multipliers must be positive");
}

AblationMode ablation_mode_from_string(const std::string& s) {
  if (s == "none") return AblationMode::none;
  if (s == "no_transform") return AblationMode::no_transform;
  if (s == "no_int_loss") return AblationMode::no_int_loss;
  throw ConfigError("unknown ablation mode: " + s);
}

void init_decoder(sprite::DecoderParams& dec, const synth::Frame& background) {
  const int res = dec.resolution;
  if (background.h != res || background.w != res)
    throw Error("init_decoder: background size mismatch");
  auto logit = [](double v) {
    v = clampd(v, 1e-3, 1.0 - 1e-3);
    return std::atanh(2.0 * v - 1.0);
  };
  for (int r = 0; r < res; ++r)
    for (int c = 0; c < res; ++c)
      for (int ch = 0; ch < 3; ++ch)
        dec.bg_logits.at(r, c, ch) = logit(background.at(r, c, ch));
  // Centered soft disc for the mask; neutral gray content.
  const double r0 = res / 8.0;
  const double center = res / 2.0;
  for (int r = 0; r < res; ++r)
    for (int c = 0; c < res; ++c) {
      double d = std::hypot(c + 0.5 - center, r + 0.5 - center);
      dec.mask_logits.at(r, c, 0) = clampd(4.0 - (d - r0), -8.0, 4.0);
    }
  std::fill(dec.content_logits.v.begin(), dec.content_logits.v.end(), 0.0);
}

DiscoveryOutcome run_ablation(const synth::FramesOnlyDataset& ds,
                              const TrainConfig& cfg, AblationMode mode) {
  cfg.validate();
  if (ds.videos.empty()) throw ConfigError("dataset has no videos");
  auto t0 = std::chrono::steady_clock::now();

  Trainer tr;
  tr.cfg = cfg;
  tr.mode = mode;
  if (mode == AblationMode::no_int_loss) tr.cfg.lambda2 = 0.0;
  tr.setup(ds);

  grad::AdamConfig ac;
  ac.lr = cfg.lr;

  DiscoveryOutcome out;

  // Stage i: decoder + latent coordinates on L_recon only.
  {
    tr.freeze_for_pretrain();
    grad::Adam adam(tr.ps.total_size(), ac);
    EpochMode em{/*physics=*/false, /*recon_grad=*/true, /*decoder_grad=*/true};
    MatrixXd xi_before = tr.m.xi.values;
    double log_s_before = tr.m.xf.log_s;
    out.traces.push_back(
        tr.run_stage("pretrain", cfg.epochs_pretrain, em, adam, false));
    if (tr.m.xi.values != xi_before || tr.m.xf.log_s != log_s_before)
      throw Error("internal: frozen parameters changed during pretrain");
  }

  if (tr.mode != AblationMode::no_transform) tr.init_transform_from_coords();
  if (cfg.warm_start_xi) tr.refit_active_ls();

  // Stage ii: everything on the total loss.
  {
    tr.unfreeze_for_total();
    grad::Adam adam(tr.ps.total_size(), ac);
    EpochMode em{true, true, true};
    out.traces.push_back(
        tr.run_stage("total", cfg.epochs_total, em, adam, false));
  }

  // Stage iii: total loss with periodic sequential thresholding.
  {
    grad::Adam adam(tr.ps.total_size(), ac);
    EpochMode em{true, true, true};
    out.traces.push_back(
        tr.run_stage("threshold", cfg.epochs_threshold, em, adam, true));
  }

  // Stage iv: refine the surviving coefficients only. The sparsity penalty
  // has done its job once the structure is frozen; leaving it on only biases
  // the surviving coefficients toward zero.
  {
    tr.freeze_for_refine();
    tr.cfg.lambda3 = 0.0;
    grad::Adam adam(tr.ps.total_size(), ac);
    EpochMode em{true, /*recon_grad=*/false, /*decoder_grad=*/false};
    std::vector<double> dec_before = tr.m.decoder.content_logits.v;
    double log_s_before = tr.m.xf.log_s;
    out.traces.push_back(
        tr.run_stage("refine", cfg.epochs_refine, em, adam, false));
    if (tr.m.decoder.content_logits.v != dec_before ||
        tr.m.xf.log_s != log_s_before)
      throw Error("internal: frozen parameters changed during refine");
  }

  out.model = std::move(tr.m);

  // Evaluate every term at the final parameters with the caller's weights
  // (the no_int_loss ablation still reports its L_int value this way).
  out.final_eval = evaluate_model(ds, cfg, out.model);

  out.warnings = std::move(tr.warnings);
  out.clamped_rollouts = tr.clamped_total;
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

DiscoveryOutcome run_discovery(const synth::FramesOnlyDataset& ds,
                               const TrainConfig& cfg) {
  return run_ablation(ds, cfg, AblationMode::none);
}

LossTerms evaluate_model(const synth::FramesOnlyDataset& ds,
                         const TrainConfig& cfg, const DiscoveryModel& model) {
  cfg.validate();
  Trainer eval;
  eval.cfg = cfg;
  eval.ds = &ds;
  eval.m = model;
  return eval.evaluate_all();
}

std::vector<grad::GradCheckEntry> check_gradients(
    const synth::FramesOnlyDataset& ds, const TrainConfig& cfg,
    int probes_per_group, double fd_step, std::uint64_t seed) {
  cfg.validate();
  Trainer tr;
  tr.cfg = cfg;
  tr.setup(ds);
  tr.init_transform_from_coords();
  // Keep probes away from bilinear integer alignments, where the sampler's
  // derivative is only one-sided.
  for (auto& c : tr.m.coords)
    for (int i = 0; i < c.size(); ++i) c.data()[i] += 0.2371;

  std::vector<int> all;
  for (std::size_t v = 0; v < ds.videos.size(); ++v)
    all.push_back(static_cast<int>(v));
  EpochMode em{true, true, true};
  auto loss_fn = [&] { return tr.step(all, em).total; };
  tr.step(all, em);
  Eigen::VectorXd analytic = tr.flat;
  // FD noise on a loss of order 1 at fd_step ~1e-6 is ~1e-11; floor the
  // relative-error denominator above that so near-zero decoder pixels are
  // judged absolutely.
  return grad::grad_check(tr.ps, loss_fn, analytic, probes_per_group, fd_step,
                          seed, 1e-6);
}

DecoderFitResult fit_decoder(const synth::FramesOnlyDataset& ds,
                             const std::vector<Eigen::MatrixXd>& coords,
                             int steps, double lr, double holdout_fraction,
                             std::uint64_t seed,
                             sprite::DecoderParams* fitted) {
  if (ds.videos.empty()) throw ConfigError("dataset has no videos");
  if (coords.size() != ds.videos.size())
    throw Error("fit_decoder: coords/videos mismatch");
  const int res = ds.resolution;

  // Median background for initialization (reuses the localization estimate).
  LocalizeResult loc = localize(ds);
  sprite::DecoderParams dec(res);
  init_decoder(dec, loc.background);

  // Deterministic per-frame holdout split.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<std::pair<int, int>>> split(2);  // 0 train, 1 holdout
  for (std::size_t v = 0; v < ds.videos.size(); ++v)
    for (std::size_t k = 0; k < ds.videos[v].frames.size(); ++k) {
      int bucket = unif(rng) < holdout_fraction ? 1 : 0;
      split[bucket].emplace_back(static_cast<int>(v), static_cast<int>(k));
    }
  if (split[0].empty()) throw Error("fit_decoder: empty training split");

  grad::ParamSet ps;
  ps.add("decoder/content", dec.content_logits.v.data(),
         dec.content_logits.v.size());
  ps.add("decoder/mask", dec.mask_logits.v.data(), dec.mask_logits.v.size());
  ps.add("decoder/bg", dec.bg_logits.v.data(), dec.bg_logits.v.size());
  grad::AdamConfig ac;
  ac.lr = lr;
  grad::Adam adam(ps.total_size(), ac);

  sprite::DecoderWorkspace ws;
  auto eval_split = [&](int bucket, sprite::DecoderGrads* g) {
    const auto& items = split[bucket];
    const double w = 1.0 / static_cast<double>(items.size());
    double loss = 0.0;
    for (auto [v, k] : items) {
      Vector2d xs = coords[static_cast<std::size_t>(v)].row(k);
      loss += sprite::decode_mse(xs, ds.videos[static_cast<std::size_t>(v)]
                                         .frames[static_cast<std::size_t>(k)],
                                 ws, w, nullptr, g);
    }
    return loss;
  };

  DecoderFitResult out;
  out.steps = steps;
  VectorXd flat(static_cast<Eigen::Index>(ps.total_size()));
  sprite::DecoderGrads g(res);
  for (int s = 0; s < steps; ++s) {
    ws.refresh(dec);
    g.zero();
    out.train_mse = eval_split(0, &g);
    std::size_t off = 0;
    for (const std::vector<double>* src :
         {&g.content.v, &g.mask.v, &g.bg.v}) {
      std::copy(src->begin(), src->end(), flat.data() + off);
      off += src->size();
    }
    adam.step(ps, flat);
  }
  ws.refresh(dec);
  out.train_mse = eval_split(0, nullptr);
  out.holdout_mse = split[1].empty() ? 0.0 : eval_split(1, nullptr);
  if (fitted) *fitted = dec;
  return out;
}

}  // namespace vid2ode::discovery
