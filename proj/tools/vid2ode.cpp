#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vid2ode/baselines.hpp"
#include "vid2ode/checkpoint.hpp"
#include "vid2ode/dataset.hpp"
#include "vid2ode/plot.hpp"
#include "vid2ode/report.hpp"
#include "vid2ode/trainer.hpp"
#include "vid2ode/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vid2ode;

namespace {

json load_config_json(const std::string& path) {
  if (path.empty()) return json::object();
  if (!fs::exists(path)) throw ConfigError("config not found: " + path);
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("invalid config JSON in " + path + ": " + e.what());
  }
}

template <typename T>
void take(json& j, const std::string& key, T& value) {
  if (!j.contains(key)) return;
  try {
    value = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for config key '" + key + "': " + e.what());
  }
  j.erase(key);
}

void reject_unknown(const json& j, const std::string& what) {
  if (j.empty()) return;
  std::string keys;
  for (const auto& [k, v] : j.items()) {
    if (!keys.empty()) keys += ", ";
    keys += k;
  }
  throw ConfigError("unknown " + what + " config keys: " + keys);
}

discovery::TrainConfig train_config_from_json(json j, double dataset_dt) {
  discovery::TrainConfig cfg;
  cfg.dt = dataset_dt;
  take(j, "lambda1", cfg.lambda1);
  take(j, "lambda2", cfg.lambda2);
  take(j, "lambda3", cfg.lambda3);
  take(j, "q", cfg.q);
  take(j, "dt", cfg.dt);
  take(j, "tau", cfg.tau);
  take(j, "threshold_interval", cfg.threshold_interval);
  take(j, "epochs_pretrain", cfg.epochs_pretrain);
  take(j, "epochs_total", cfg.epochs_total);
  take(j, "epochs_threshold", cfg.epochs_threshold);
  take(j, "epochs_refine", cfg.epochs_refine);
  take(j, "lr", cfg.lr);
  take(j, "model_order", cfg.model_order);
  take(j, "library_degree", cfg.library_degree);
  take(j, "batch_size", cfg.batch_size);
  take(j, "seed", cfg.seed);
  take(j, "lr_mult_decoder", cfg.lr_mult_decoder);
  take(j, "lr_mult_xi", cfg.lr_mult_xi);
  take(j, "warm_start_xi", cfg.warm_start_xi);
  reject_unknown(j, "training");
  cfg.validate();
  return cfg;
}

json train_config_to_json(const discovery::TrainConfig& c) {
  return {{"lambda1", c.lambda1},
          {"lambda2", c.lambda2},
          {"lambda3", c.lambda3},
          {"q", c.q},
          {"dt", c.dt},
          {"tau", c.tau},
          {"threshold_interval", c.threshold_interval},
          {"epochs_pretrain", c.epochs_pretrain},
          {"epochs_total", c.epochs_total},
          {"epochs_threshold", c.epochs_threshold},
          {"epochs_refine", c.epochs_refine},
          {"lr", c.lr},
          {"model_order", c.model_order},
          {"library_degree", c.library_degree},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"lr_mult_decoder", c.lr_mult_decoder},
          {"lr_mult_xi", c.lr_mult_xi},
          {"warm_start_xi", c.warm_start_xi}};
}

baselines::TwoStepConfig two_step_config_from_json(json j) {
  baselines::TwoStepConfig cfg;
  take(j, "tol", cfg.tol);
  take(j, "ridge_lambda", cfg.ridge_lambda);
  take(j, "normalize", cfg.normalize);
  take(j, "pretrain_epochs", cfg.pretrain_epochs);
  take(j, "lr", cfg.lr);
  take(j, "lr_mult_decoder", cfg.lr_mult_decoder);
  take(j, "model_order", cfg.model_order);
  take(j, "library_degree", cfg.library_degree);
  take(j, "scale_factor", cfg.scale_factor);
  reject_unknown(j, "baseline");
  return cfg;
}

json two_step_config_to_json(const baselines::TwoStepConfig& c) {
  return {{"tol", c.tol},
          {"ridge_lambda", c.ridge_lambda},
          {"normalize", c.normalize},
          {"pretrain_epochs", c.pretrain_epochs},
          {"lr", c.lr},
          {"lr_mult_decoder", c.lr_mult_decoder},
          {"model_order", c.model_order},
          {"library_degree", c.library_degree},
          {"scale_factor", c.scale_factor}};
}

// Partial outputs carry a marker file that is removed only on success.
struct IncompleteMarker {
  std::string path;
  explicit IncompleteMarker(const std::string& dir) : path(dir + "/.incomplete") {
    fs::create_directories(dir);
    write_text_file(path, "");
  }
  void done() const { fs::remove(path); }
};

void write_model_checkpoint(const std::string& path,
                            const discovery::DiscoveryModel& m) {
  grad::Checkpoint ckpt;
  auto put_image = [&](const std::string& name, const sprite::Image& img) {
    ckpt.put(name,
             {static_cast<std::size_t>(img.h), static_cast<std::size_t>(img.w),
              static_cast<std::size_t>(img.c)},
             img.v);
  };
  put_image("decoder/content", m.decoder.content_logits);
  put_image("decoder/mask", m.decoder.mask_logits);
  put_image("decoder/bg", m.decoder.bg_logits);
  ckpt.put("xform", {3}, {m.xf.log_s, m.xf.t[0], m.xf.t[1]});
  std::vector<double> xi(m.xi.values.data(),
                         m.xi.values.data() + m.xi.values.size());
  ckpt.put("xi", {static_cast<std::size_t>(m.xi.n_terms()),
                  static_cast<std::size_t>(m.xi.n_eqs())},
           xi);
  std::vector<double> mask;
  for (int c = 0; c < m.xi.n_eqs(); ++c)
    for (int t = 0; t < m.xi.n_terms(); ++t)
      mask.push_back(m.xi.active(t, c) ? 1.0 : 0.0);
  ckpt.put("xi_mask", {static_cast<std::size_t>(m.xi.n_terms()),
                       static_cast<std::size_t>(m.xi.n_eqs())},
           mask);
  for (std::size_t v = 0; v < m.coords.size(); ++v) {
    std::vector<double> c(m.coords[v].data(),
                          m.coords[v].data() + m.coords[v].size());
    ckpt.put("coords/" + std::to_string(v),
             {static_cast<std::size_t>(m.coords[v].rows()), 2}, c);
  }
  write_checkpoint(path, ckpt);
}

void write_discovery_outputs(const std::string& out,
                             const discovery::DiscoveryOutcome& outcome,
                             const discovery::DiscoveryReport& rep,
                             const synth::FramesOnlyDataset& ds) {
  discovery::write_report_json(out + "/report.json", rep);
  features::write_coefficients_csv(out + "/coefficients.csv", rep.lib,
                                   rep.xi_final);
  features::write_coefficients_csv(out + "/coefficients_rescaled.csv", rep.lib,
                                   rep.xi_rescaled);
  std::vector<std::vector<double>> series(5);
  for (const auto& tr : rep.traces)
    for (const auto& e : tr.epochs) {
      series[0].push_back(e.total);
      series[1].push_back(e.recon);
      series[2].push_back(e.xdot);
      series[3].push_back(e.integral);
      series[4].push_back(e.reg);
    }
  plot::plot_series(out + "/loss_traces.png", series,
                    {"total", "recon", "xdot", "int", "reg"}, 640, 400, true);
  if (!outcome.model.coords.empty() && !ds.videos.empty() &&
      !ds.videos[0].frames.empty())
    plot::plot_trajectory(out + "/trajectory.png", ds.videos[0].frames[0],
                          outcome.model.coords[0]);
  write_model_checkpoint(out + "/checkpoint.bin", outcome.model);
}

void print_report_summary(const discovery::DiscoveryReport& rep) {
  if (!rep.system_name.empty())
    std::printf("system: %s\n", rep.system_name.c_str());
  std::printf("alpha: %g  signs: (%+g, %+g)\n", rep.alpha, rep.signs[0],
              rep.signs[1]);
  if (rep.translation)
    std::printf("translation: (%g, %g)\n", (*rep.translation)[0],
                (*rep.translation)[1]);
  for (const auto& eq : rep.equations) std::printf("%s\n", eq.c_str());
  for (std::size_t i = 0; i < rep.scores.size(); ++i)
    std::printf("equation %zu: TPT=%d FPT=%d\n", i, rep.scores[i].tpt,
                rep.scores[i].fpt);
}

int run(int argc, char** argv) {
  CLI::App app{"vid2ode: governing-equation discovery from synthetic videos"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads,
                 "worker threads (0 = hardware; VID2ODE_THREADS overrides)");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "synthesize a video dataset");
  std::string sy_system = "duffing", sy_out = "dataset", sy_background;
  int sy_videos = 8, sy_frames = 400;
  double sy_dt = 0.05;
  std::uint64_t sy_seed = 0;
  bool sy_hard = false;
  synth_cmd->add_option("--system", sy_system, "system name");
  synth_cmd->add_option("--videos", sy_videos, "number of videos");
  synth_cmd->add_option("--frames", sy_frames, "frames per video");
  synth_cmd->add_option("--dt", sy_dt, "frame interval");
  synth_cmd->add_option("--seed", sy_seed, "RNG seed");
  synth_cmd->add_option("--out", sy_out, "output directory");
  synth_cmd->add_option("--background", sy_background, "background PNG path");
  synth_cmd->add_flag("--hard-replace", sy_hard, "binary marker compositing");

  // shared discover/ablate/baseline options
  std::string data_dir, out_dir = "run", config_path, abl_mode = "none";
  bool no_score = false, gt_coords = false;
  auto add_run_opts = [&](CLI::App* cmd) {
    cmd->add_option("--data", data_dir, "dataset directory")->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_flag("--no-score", no_score,
                  "skip ground-truth scoring/rescaling reference");
  };
  auto* discover_cmd = app.add_subcommand("discover", "full discovery run");
  add_run_opts(discover_cmd);
  auto* ablate_cmd = app.add_subcommand("ablate", "ablation run");
  add_run_opts(ablate_cmd);
  ablate_cmd->add_option("--mode", abl_mode,
                         "none | no_transform | no_int_loss");
  auto* baseline_cmd =
      app.add_subcommand("baseline", "two-step STRidge baseline");
  add_run_opts(baseline_cmd);
  baseline_cmd->add_flag("--gt-coords", gt_coords,
                         "feed ground-truth pixel coordinates");

  // report
  auto* report_cmd =
      app.add_subcommand("report", "print a human-readable report summary");
  std::string report_in;
  report_cmd->add_option("--in", report_in, "report.json path")->required();

  // gradcheck
  auto* gradcheck_cmd =
      app.add_subcommand("gradcheck", "reverse-mode vs finite differences");
  std::string gc_system = "duffing";
  int gc_probes = 4, gc_frames = 12, gc_videos = 1, gc_order = 1, gc_degree = 3;
  double gc_tol = 1e-4, gc_step = 1e-6;
  std::uint64_t gc_seed = 0;
  gradcheck_cmd->add_option("--system", gc_system, "system name");
  gradcheck_cmd->add_option("--probes", gc_probes, "probes per group");
  gradcheck_cmd->add_option("--frames", gc_frames, "frames per video");
  gradcheck_cmd->add_option("--videos", gc_videos, "videos");
  gradcheck_cmd->add_option("--order", gc_order, "model order");
  gradcheck_cmd->add_option("--degree", gc_degree, "library degree");
  gradcheck_cmd->add_option("--tol", gc_tol, "max relative error");
  gradcheck_cmd->add_option("--step", gc_step, "finite-difference step");
  gradcheck_cmd->add_option("--seed", gc_seed, "probe seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (const char* env = std::getenv("VID2ODE_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) threads = n;
  }
  set_thread_count(threads);

  if (synth_cmd->parsed()) {
    const auto& sys = dyn::system_by_name(sy_system);
    synth::SynthOptions opt;
    opt.n_videos = sy_videos;
    opt.n_frames = sy_frames;
    opt.dt = sy_dt;
    opt.seed = sy_seed;
    opt.hard_replace = sy_hard;
    opt.background_png = sy_background;
    IncompleteMarker marker(sy_out);
    synth::VideoDataset ds = synth::synthesize_dataset(sys, opt);
    synth::write_dataset(ds, sy_out);
    marker.done();
    std::printf("wrote %d videos x %d frames to %s\n", sy_videos, sy_frames,
                sy_out.c_str());
    return 0;
  }

  if (discover_cmd->parsed() || ablate_cmd->parsed()) {
    synth::FramesOnlyDataset frames = synth::read_dataset_frames(data_dir);
    discovery::TrainConfig cfg =
        train_config_from_json(load_config_json(config_path), frames.dt);
    discovery::AblationMode mode =
        discover_cmd->parsed() ? discovery::AblationMode::none
                               : discovery::ablation_mode_from_string(abl_mode);
    IncompleteMarker marker(out_dir);
    json resolved = train_config_to_json(cfg);
    resolved["data"] = data_dir;
    resolved["threads"] = thread_count();
    if (ablate_cmd->parsed()) resolved["mode"] = abl_mode;
    write_text_file(out_dir + "/resolved_config.json", resolved.dump(2) + "\n");

    discovery::DiscoveryOutcome outcome =
        discovery::run_ablation(frames, cfg, mode);
    synth::VideoDataset gt;
    const synth::VideoDataset* gt_ptr = nullptr;
    if (!no_score) {
      gt = synth::read_dataset(data_dir);
      gt_ptr = &gt;
    }
    discovery::DiscoveryReport rep = discovery::make_report(outcome, gt_ptr);
    write_discovery_outputs(out_dir, outcome, rep, frames);
    if (ablate_cmd->parsed()) {
      std::string csv = "mode,equation,tpt,fpt\n";
      for (std::size_t i = 0; i < rep.scores.size(); ++i)
        csv += abl_mode + "," + std::to_string(i) + "," +
               std::to_string(rep.scores[i].tpt) + "," +
               std::to_string(rep.scores[i].fpt) + "\n";
      write_text_file(out_dir + "/ablation.csv", csv);
    }
    marker.done();
    print_report_summary(rep);
    return 0;
  }

  if (baseline_cmd->parsed()) {
    synth::FramesOnlyDataset frames = synth::read_dataset_frames(data_dir);
    baselines::TwoStepConfig cfg =
        two_step_config_from_json(load_config_json(config_path));
    synth::VideoDataset gt;
    const synth::VideoDataset* gt_ptr = nullptr;
    std::vector<Eigen::MatrixXd> gt_pixel;
    if (!no_score || gt_coords) {
      gt = synth::read_dataset(data_dir);
      if (!no_score) gt_ptr = &gt;
      if (gt_coords)
        for (const auto& g : gt.ground_truth) {
          Eigen::MatrixXd c(static_cast<Eigen::Index>(g.pixel.size()), 2);
          for (std::size_t k = 0; k < g.pixel.size(); ++k)
            c.row(static_cast<Eigen::Index>(k)) = g.pixel[k].transpose();
          gt_pixel.push_back(std::move(c));
        }
    }
    IncompleteMarker marker(out_dir);
    json resolved = two_step_config_to_json(cfg);
    resolved["data"] = data_dir;
    resolved["gt_coords"] = gt_coords;
    write_text_file(out_dir + "/resolved_config.json", resolved.dump(2) + "\n");
    discovery::DiscoveryReport rep = baselines::run_two_step(
        frames, cfg, gt_ptr, gt_coords ? &gt_pixel : nullptr);
    discovery::write_report_json(out_dir + "/report.json", rep);
    features::write_coefficients_csv(out_dir + "/coefficients_rescaled.csv",
                                     rep.lib, rep.xi_rescaled);
    marker.done();
    print_report_summary(rep);
    return 0;
  }

  if (report_cmd->parsed()) {
    json j;
    try {
      j = json::parse(read_text_file(report_in));
    } catch (const json::exception& e) {
      throw Error("invalid report JSON: " + std::string(e.what()));
    }
    if (j.contains("system") && !j["system"].get<std::string>().empty())
      std::printf("system: %s\n", j["system"].get<std::string>().c_str());
    std::printf("alpha: %g\n", j.at("alpha").get<double>());
    for (const auto& eq : j.at("equations"))
      std::printf("%s\n", eq.get<std::string>().c_str());
    for (std::size_t i = 0; i < j.at("scores").size(); ++i)
      std::printf("equation %zu: TPT=%d FPT=%d\n", i,
                  j["scores"][i].at("tpt").get<int>(),
                  j["scores"][i].at("fpt").get<int>());
    return 0;
  }

  if (gradcheck_cmd->parsed()) {
    const auto& sys = dyn::system_by_name(gc_system);
    synth::SynthOptions opt;
    opt.n_videos = gc_videos;
    opt.n_frames = gc_frames;
    opt.seed = gc_seed;
    synth::VideoDataset ds = synth::synthesize_dataset(sys, opt);
    discovery::TrainConfig cfg;
    cfg.dt = ds.data.dt;
    cfg.model_order = gc_order;
    cfg.library_degree = gc_degree;
    auto entries =
        discovery::check_gradients(ds.data, cfg, gc_probes, gc_step, gc_seed);
    bool ok = true;
    std::printf("%-20s %12s %12s %7s\n", "group", "max_rel_err", "max_abs_err",
                "probes");
    for (const auto& e : entries) {
      std::printf("%-20s %12.3e %12.3e %7d\n", e.group.c_str(), e.max_rel_err,
                  e.max_abs_err, e.probes);
      if (e.max_rel_err > gc_tol) ok = false;
    }
    if (!ok) {
      std::fprintf(stderr, "gradient check failed (tol %g)\n", gc_tol);
      return 1;
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
