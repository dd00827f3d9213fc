#include "vid2ode/localize.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "vid2ode/util.hpp"

namespace vid2ode::discovery {

namespace {

synth::Frame median_background(const synth::FramesOnlyDataset& ds) {
  const int h = ds.videos.front().frames.front().h;
  const int w = ds.videos.front().frames.front().w;
  std::size_t n_frames = 0;
  for (const auto& v : ds.videos) n_frames += v.frames.size();
  synth::Frame bg(h, w);
  const std::size_t n_ch = static_cast<std::size_t>(h) * w * 3;
  parallel_for(n_ch, [&](std::size_t i) {
    std::vector<float> vals;
    vals.reserve(n_frames);
    for (const auto& v : ds.videos)
      for (const auto& f : v.frames) vals.push_back(f.rgb[i]);
    auto mid = vals.begin() + static_cast<std::ptrdiff_t>(vals.size() / 2);
    std::nth_element(vals.begin(), mid, vals.end());
    bg.rgb[i] = *mid;
  });
  return bg;
}

}  // namespace

LocalizeResult localize(const synth::FramesOnlyDataset& ds) {
  if (ds.videos.empty() || ds.videos.front().frames.empty())
    throw Error("localize: empty dataset");
  const int h = ds.videos.front().frames.front().h;
  const int w = ds.videos.front().frames.front().w;
  const std::size_t n_px = static_cast<std::size_t>(h) * w;

  LocalizeResult res;
  res.background = median_background(ds);
  res.coords.resize(ds.videos.size());

  std::vector<std::vector<int>> empties(ds.videos.size());
  parallel_for(ds.videos.size(), [&](std::size_t vi) {
    const auto& video = ds.videos[vi];
    const int m = static_cast<int>(video.frames.size());
    Eigen::MatrixXd coords(m, 2);
    std::vector<char> found(m, 0);
    std::vector<float> wbuf(n_px);
    std::vector<float> sorted(n_px);
    for (int k = 0; k < m; ++k) {
      const auto& f = video.frames[k];
      for (std::size_t p = 0; p < n_px; ++p) {
        float d = 0.f;
        for (int ch = 0; ch < 3; ++ch)
          d += std::fabs(f.rgb[p * 3 + ch] - res.background.rgb[p * 3 + ch]);
        wbuf[p] = d;
      }
      sorted = wbuf;
      auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(n_px / 2);
      std::nth_element(sorted.begin(), mid, sorted.end());
      const float thr = 3.0f * *mid;
      double wsum = 0.0, cx = 0.0, cy = 0.0;
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          const double wt = wbuf[static_cast<std::size_t>(r) * w + c];
          if (wt <= thr) continue;
          wsum += wt;
          cx += wt * (c + 0.5);
          cy += wt * (r + 0.5);
        }
      if (wsum > 0.0) {
        coords(k, 0) = cx / wsum;
        coords(k, 1) = cy / wsum;
        found[k] = 1;
      } else {
        coords(k, 0) = coords(k, 1) = 0.0;
        empties[vi].push_back(k);
      }
    }
    // Fill empty-foreground frames from the nearest localized neighbor.
    for (int k : empties[vi]) {
      for (int d = 1; d < m; ++d) {
        if (k - d >= 0 && found[k - d]) {
          coords.row(k) = coords.row(k - d);
          break;
        }
        if (k + d < m && found[k + d]) {
          coords.row(k) = coords.row(k + d);
          break;
        }
      }
    }
    res.coords[vi] = std::move(coords);
  });

  for (std::size_t vi = 0; vi < empties.size(); ++vi)
    for (int k : empties[vi])
      res.empty_foreground.emplace_back(static_cast<int>(vi), k);
  std::size_t total_frames = 0;
  for (const auto& v : ds.videos) total_frames += v.frames.size();
  if (res.empty_foreground.size() == total_frames)
    throw Error("localize: no foreground found in any frame");
  return res;
}

}  // namespace vid2ode::discovery
