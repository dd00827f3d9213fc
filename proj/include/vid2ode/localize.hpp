#pragma once

#include <vector>

#include <Eigen/Dense>

#include "vid2ode/dataset.hpp"

namespace vid2ode::discovery {

struct LocalizeResult {
  // One m x 2 array of pixel coordinates per video.
  std::vector<Eigen::MatrixXd> coords;
  // Background estimate (per-pixel median over frames, all videos pooled).
  synth::Frame background;
  // Frames whose foreground came up empty (coordinate copied from the
  // nearest neighboring frame): (video, frame) pairs.
  std::vector<std::pair<int, int>> empty_foreground;
};

// Classical moving-object localization: median background subtraction, a
// 3x-median magnitude threshold, and a foreground-weighted centroid.
LocalizeResult localize(const synth::FramesOnlyDataset& ds);

}  // namespace vid2ode::discovery
