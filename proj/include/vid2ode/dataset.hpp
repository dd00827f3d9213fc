#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vid2ode/render.hpp"
#include "vid2ode/systems.hpp"

namespace vid2ode::synth {

// Per-video ground truth, for evaluation only. Kept in a dedicated manifest
// section ("ground_truth") that the discovery-side loader never parses.
struct VideoGroundTruth {
  Eigen::MatrixXd physical;            // m x d states
  std::vector<PixelCoord> pixel;       // m marker centers
};

struct Video {
  std::string name;
  std::vector<Frame> frames;
};

// What the discovery pipeline is allowed to see.
struct FramesOnlyDataset {
  std::vector<Video> videos;
  double dt = 0.0;
  int resolution = 0;
};

struct VideoDataset {
  FramesOnlyDataset data;
  std::string system_name;
  RenderConfig render_config;
  std::vector<VideoGroundTruth> ground_truth;
};

struct SynthOptions {
  int n_videos = 8;
  int n_frames = 400;
  double dt = 0.05;
  std::uint64_t seed = 0;
  bool hard_replace = false;
  // Empty -> bundled procedural texture.
  std::string background_png;
};

VideoDataset synthesize_dataset(const dyn::SystemSpec& system,
                                const SynthOptions& opt);

// Layout: <dir>/manifest.json plus <dir>/video_###/frame_%05d.png.
void write_dataset(const VideoDataset& ds, const std::string& dir);
VideoDataset read_dataset(const std::string& dir);
// Loads frames and timing only; ignores the ground_truth manifest section.
FramesOnlyDataset read_dataset_frames(const std::string& dir);

}  // namespace vid2ode::synth
