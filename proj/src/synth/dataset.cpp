#include "vid2ode/dataset.hpp"

#include <cstdio>
#include <filesystem>

#include <json.hpp>

#include "vid2ode/trajectory.hpp"
#include "vid2ode/util.hpp"

namespace vid2ode::synth {

namespace fs = std::filesystem;
using nlohmann::json;

VideoDataset synthesize_dataset(const dyn::SystemSpec& system,
                                const SynthOptions& opt) {
  if (opt.n_videos < 1 || opt.n_frames < 3)
    throw ConfigError("synthesize_dataset: need >= 1 video and >= 3 frames");
  auto ics = dyn::sample_initial_conditions(system, opt.n_videos, opt.seed);

  std::vector<dyn::Trajectory> trajs(ics.size());
  for (std::size_t v = 0; v < ics.size(); ++v)
    trajs[v] = dyn::simulate(system, ics[v], opt.n_frames, opt.dt);

  VideoDataset ds;
  ds.system_name = system.name;
  ds.data.dt = opt.dt;

  RenderConfig cfg;
  cfg.hard_replace = opt.hard_replace;
  if (!opt.background_png.empty()) {
    Frame bg = read_png(opt.background_png);
    if (bg.h != cfg.output_resolution || bg.w != cfg.output_resolution)
      throw ConfigError("background image must be " +
                        std::to_string(cfg.output_resolution) + "x" +
                        std::to_string(cfg.output_resolution));
    cfg.background = bg;
  } else {
    cfg.background = procedural_background(cfg.output_resolution, opt.seed ^ 0x9e3779b97f4a7c15ull);
  }
  std::vector<Eigen::MatrixXd> positions;
  for (const auto& t : trajs) positions.push_back(t.states.leftCols(2));
  cfg.world_bounds = default_world_bounds(positions);
  ds.render_config = cfg;
  ds.data.resolution = cfg.output_resolution;

  ds.data.videos.resize(trajs.size());
  ds.ground_truth.resize(trajs.size());
  parallel_for(trajs.size(), [&](std::size_t v) {
    char name[32];
    std::snprintf(name, sizeof(name), "video_%03zu", v);
    auto coords = world_to_pixel(trajs[v].states.leftCols(2), cfg);
    ds.data.videos[v] = {name, render_video(coords, cfg)};
    ds.ground_truth[v] = {trajs[v].states, std::move(coords)};
  });
  return ds;
}

namespace {

json bounds_to_json(const WorldBounds& b) {
  return json{{"xmin", b.xmin}, {"xmax", b.xmax}, {"ymin", b.ymin}, {"ymax", b.ymax}};
}

WorldBounds bounds_from_json(const json& j) {
  return {j.at("xmin").get<double>(), j.at("xmax").get<double>(),
          j.at("ymin").get<double>(), j.at("ymax").get<double>()};
}

template <typename T>
T require(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key))
    throw Error("dataset manifest: missing field '" + std::string(key) + "' in " + ctx);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error("dataset manifest: bad field '" + std::string(key) + "' in " + ctx);
  }
}

}  // namespace

void write_dataset(const VideoDataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  json manifest;
  manifest["schema_version"] = 1;
  manifest["system"] = ds.system_name;
  manifest["dt"] = ds.data.dt;
  manifest["resolution"] = ds.data.resolution;
  manifest["world_bounds"] = bounds_to_json(ds.render_config.world_bounds);
  manifest["marker"] = {
      {"radius_supersample_px", ds.render_config.marker_radius_px},
      {"supersample_resolution", ds.render_config.supersample_resolution},
      {"color", {ds.render_config.marker_color[0], ds.render_config.marker_color[1],
                 ds.render_config.marker_color[2]}},
      {"hard_replace", ds.render_config.hard_replace}};

  json videos = json::array();
  json gts = json::array();
  for (std::size_t v = 0; v < ds.data.videos.size(); ++v) {
    const Video& vid = ds.data.videos[v];
    videos.push_back({{"name", vid.name},
                      {"frames", static_cast<int>(vid.frames.size())}});
    fs::create_directories(fs::path(dir) / vid.name);
    for (std::size_t k = 0; k < vid.frames.size(); ++k) {
      char fname[32];
      std::snprintf(fname, sizeof(fname), "frame_%05zu.png", k);
      write_png((fs::path(dir) / vid.name / fname).string(), vid.frames[k]);
    }
    if (v < ds.ground_truth.size()) {
      const auto& gt = ds.ground_truth[v];
      json jphys = json::array(), jpix = json::array();
      for (Eigen::Index k = 0; k < gt.physical.rows(); ++k) {
        json row = json::array();
        for (Eigen::Index i = 0; i < gt.physical.cols(); ++i)
          row.push_back(gt.physical(k, i));
        jphys.push_back(std::move(row));
      }
      for (const auto& p : gt.pixel) jpix.push_back({p[0], p[1]});
      gts.push_back({{"video", vid.name},
                     {"physical", std::move(jphys)},
                     {"pixel", std::move(jpix)}});
    }
  }
  manifest["videos"] = std::move(videos);
  if (!gts.empty()) manifest["ground_truth"] = std::move(gts);
  write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");

  // Write the background separately so readers can rebuild the render config.
  write_png((fs::path(dir) / "background.png").string(), ds.render_config.background);
}

namespace {

json load_manifest(const std::string& dir) {
  fs::path mpath = fs::path(dir) / "manifest.json";
  if (!fs::exists(mpath)) throw Error("dataset manifest not found: " + mpath.string());
  json manifest;
  try {
    manifest = json::parse(read_text_file(mpath.string()));
  } catch (const json::exception& e) {
    throw Error("corrupt dataset manifest " + mpath.string() + ": " + e.what());
  }
  return manifest;
}

FramesOnlyDataset load_frames(const std::string& dir, const json& manifest) {
  FramesOnlyDataset data;
  data.dt = require<double>(manifest, "dt", "manifest");
  data.resolution = require<int>(manifest, "resolution", "manifest");
  if (!manifest.contains("videos"))
    throw Error("dataset manifest: missing field 'videos' in manifest");
  for (const auto& jv : manifest.at("videos")) {
    Video vid;
    vid.name = require<std::string>(jv, "name", "videos[]");
    int n = require<int>(jv, "frames", "videos[]");
    vid.frames.resize(n);
    for (int k = 0; k < n; ++k) {
      char fname[32];
      std::snprintf(fname, sizeof(fname), "frame_%05d.png", k);
      vid.frames[k] = read_png((fs::path(dir) / vid.name / fname).string());
      if (vid.frames[k].h != data.resolution || vid.frames[k].w != data.resolution)
        throw Error("frame resolution mismatch in " + vid.name);
    }
    data.videos.push_back(std::move(vid));
  }
  return data;
}

}  // namespace

FramesOnlyDataset read_dataset_frames(const std::string& dir) {
  return load_frames(dir, load_manifest(dir));
}

VideoDataset read_dataset(const std::string& dir) {
  json manifest = load_manifest(dir);
  VideoDataset ds;
  ds.data = load_frames(dir, manifest);
  ds.system_name = require<std::string>(manifest, "system", "manifest");
  RenderConfig cfg;
  cfg.world_bounds = bounds_from_json(manifest.at("world_bounds"));
  const json& marker = manifest.at("marker");
  cfg.marker_radius_px = require<double>(marker, "radius_supersample_px", "marker");
  cfg.supersample_resolution = require<int>(marker, "supersample_resolution", "marker");
  cfg.output_resolution = ds.data.resolution;
  cfg.hard_replace = require<bool>(marker, "hard_replace", "marker");
  auto color = marker.at("color");
  for (int i = 0; i < 3; ++i) cfg.marker_color[i] = color.at(i).get<float>();
  fs::path bgpath = fs::path(dir) / "background.png";
  if (fs::exists(bgpath)) cfg.background = read_png(bgpath.string());
  ds.render_config = std::move(cfg);

  if (manifest.contains("ground_truth")) {
    for (const auto& jg : manifest.at("ground_truth")) {
      VideoGroundTruth gt;
      const auto& jphys = jg.at("physical");
      if (!jphys.empty()) {
        gt.physical.resize(static_cast<Eigen::Index>(jphys.size()),
                           static_cast<Eigen::Index>(jphys[0].size()));
        for (std::size_t k = 0; k < jphys.size(); ++k)
          for (std::size_t i = 0; i < jphys[k].size(); ++i)
            gt.physical(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) =
                jphys[k][i].get<double>();
      }
      for (const auto& jp : jg.at("pixel"))
        gt.pixel.push_back({jp.at(0).get<double>(), jp.at(1).get<double>()});
      ds.ground_truth.push_back(std::move(gt));
    }
  }
  return ds;
}

}  // namespace vid2ode::synth
