#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "placedet/box.hpp"
#include "placedet/channels.hpp"
#include "placedet/errors.hpp"
#include "placedet/svm.hpp"

namespace placedet::detector {

struct Detection {
  BoundingBox box;
  double score = 0.0;
  int level = 0;
};

struct DetectConfig {
  WindowSize window{64, 128};
  int stride_cells = 2;
  double score_threshold = 0.0;
  double nms_overlap = 0.5;
};

// Feature vector length of a window: channel-major, then row, then column.
// This flattening order is part of the model file format.
inline int window_feature_dim(WindowSize window, int shrink) {
  return (window.w / shrink) * (window.h / shrink) * kChannelCount;
}

inline void validate_window(WindowSize window, int shrink) {
  if (window.w < shrink || window.h < shrink || window.w % shrink != 0 ||
      window.h % shrink != 0) {
    throw InvalidInputError(
        "detector: window dimensions must be positive multiples of shrink");
  }
}

// Copies the window at cell (row, col) into `out` in flattening order.
inline void extract_window(const ChannelStack& stack, int row, int col,
                           WindowSize window, std::vector<float>& out) {
  const int wc = window.w / stack.shrink;
  const int hc = window.h / stack.shrink;
  out.resize(static_cast<std::size_t>(wc) * hc * kChannelCount);
  float* dst = out.data();
  for (int c = 0; c < kChannelCount; ++c) {
    const float* plane = stack.plane(c);
    for (int r = 0; r < hc; ++r) {
      const float* src =
          plane + static_cast<std::size_t>(row + r) * stack.width_cells + col;
      std::copy(src, src + wc, dst);
      dst += wc;
    }
  }
}

inline double score_window_at(const ChannelStack& stack,
                              const svm::LinearModel& model, int row, int col,
                              WindowSize window) {
  const int wc = window.w / stack.shrink;
  const int hc = window.h / stack.shrink;
  double s = model.bias;
  const double* w = model.weights.data();
  for (int c = 0; c < kChannelCount; ++c) {
    const float* plane = stack.plane(c);
    for (int r = 0; r < hc; ++r) {
      const float* src =
          plane + static_cast<std::size_t>(row + r) * stack.width_cells + col;
      for (int j = 0; j < wc; ++j) s += w[j] * src[j];
      w += wc;
    }
  }
  return s;
}

// Scores every fully-inside window placement at the given stride. Boxes
// come back in the stack's own pixel coordinates; one Detection per
// placement, no thresholding.
inline std::vector<Detection> score_windows(const ChannelStack& stack,
                                            const svm::LinearModel& model,
                                            WindowSize window,
                                            int stride_cells) {
  validate_window(window, stack.shrink);
  if (stride_cells < 1) {
    throw InvalidInputError("score_windows: stride_cells must be >= 1");
  }
  const int wc = window.w / stack.shrink;
  const int hc = window.h / stack.shrink;
  if (model.feature_dim != wc * hc * kChannelCount ||
      static_cast<int>(model.weights.size()) != model.feature_dim) {
    throw DimensionError("score_windows: model/window dimension mismatch");
  }
  if (stack.width_cells < wc || stack.height_cells < hc) {
    throw InvalidInputError("score_windows: stack smaller than one window");
  }

  std::vector<Detection> out;
  for (int row = 0; row + hc <= stack.height_cells; row += stride_cells) {
    for (int col = 0; col + wc <= stack.width_cells; col += stride_cells) {
      Detection det;
      det.box = BoundingBox{static_cast<double>(col * stack.shrink),
                            static_cast<double>(row * stack.shrink),
                            static_cast<double>(window.w),
                            static_cast<double>(window.h)};
      det.score = score_window_at(stack, model, row, col, window);
      out.push_back(det);
    }
  }
  return out;
}

// Greedy IoU suppression: repeatedly keep the best remaining detection and
// drop everything overlapping it by more than the threshold. Ties in score
// resolve to the earlier input element. Output sorted by descending score.
inline std::vector<Detection> nms(const std::vector<Detection>& dets,
                                  double overlap_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });
  std::vector<Detection> kept;
  std::vector<char> dead(dets.size(), 0);
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    if (dead[i]) continue;
    kept.push_back(dets[i]);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (!dead[j] && iou(dets[i].box, dets[j].box) > overlap_threshold) {
        dead[j] = 1;
      }
    }
  }
  return kept;
}

namespace detail {

inline BoundingBox to_image_coords(const BoundingBox& level_box, double scale,
                                   int image_w, int image_h) {
  BoundingBox b{level_box.x / scale, level_box.y / scale, level_box.w / scale,
                level_box.h / scale};
  // Clip to image bounds.
  const double x2 = std::min(b.x2(), static_cast<double>(image_w));
  const double y2 = std::min(b.y2(), static_cast<double>(image_h));
  b.x = std::max(b.x, 0.0);
  b.y = std::max(b.y, 0.0);
  b.w = x2 - b.x;
  b.h = y2 - b.y;
  return b;
}

}  // namespace detail

// Threshold + NMS over a prebuilt pyramid; boxes mapped back to original
// image coordinates by dividing by the level scale.
inline std::vector<Detection> detect_on_pyramid(const FeaturePyramid& pyr,
                                                const svm::LinearModel& model,
                                                const DetectConfig& cfg) {
  std::vector<Detection> all;
  for (std::size_t li = 0; li < pyr.levels.size(); ++li) {
    const auto& level = pyr.levels[li];
    auto dets = score_windows(level.stack, model, cfg.window, cfg.stride_cells);
    for (auto& d : dets) {
      if (d.score < cfg.score_threshold) continue;
      d.level = static_cast<int>(li);
      d.box = detail::to_image_coords(d.box, level.scale, pyr.image_width,
                                      pyr.image_height);
      if (d.box.valid()) all.push_back(d);
    }
  }
  return nms(all, cfg.nms_overlap);
}

inline std::vector<Detection> detect(const Image8& img,
                                     const svm::LinearModel& model,
                                     const DetectConfig& cfg,
                                     const PyramidConfig& pyramid_cfg) {
  PyramidConfig pcfg = pyramid_cfg;
  pcfg.min_window = cfg.window;
  return detect_on_pyramid(build_pyramid(img, pcfg), model, cfg);
}

}  // namespace placedet::detector
