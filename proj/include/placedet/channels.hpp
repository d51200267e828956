#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "placedet/errors.hpp"
#include "placedet/image.hpp"

namespace placedet {

// Channel layout. Values are kept in roughly [0, 1]:
//   0     L of CIELUV (L* / 100)
//   1     u* remapped by (u + 134) / 354
//   2     v* remapped by (v + 140) / 262
//   3     gradient magnitude of the intensity image scaled to [0, 1]
//         (intensity in [0, 1], centered differences, max magnitude sqrt(2)/2)
//   4..9  gradient magnitude soft-binned over 6 unsigned orientations in
//         [0, pi); bin k is centered at k*pi/6
// RGB is treated as linear with a D65 white point. Gradients are computed
// on the mean-RGB intensity, which keeps the gradient channels exactly
// homogeneous under intensity scaling.
inline constexpr int kChannelCount = 10;
inline constexpr int kOrientationBins = 6;
inline constexpr int kGradMagChannel = 3;
inline constexpr int kFirstOrientChannel = 4;

// One image's aggregated channel features at a single scale. Cells are
// shrink x shrink pixel blocks; trailing pixels that do not fill a whole
// cell are dropped.
struct ChannelStack {
  int width_cells = 0;
  int height_cells = 0;
  int shrink = 0;
  std::vector<float> values;  // [channel][row][col], channel-major planes

  std::size_t plane_size() const {
    return static_cast<std::size_t>(width_cells) * height_cells;
  }
  const float* plane(int c) const { return values.data() + c * plane_size(); }
  float* plane(int c) { return values.data() + c * plane_size(); }
  float at(int c, int row, int col) const {
    return values[c * plane_size() + static_cast<std::size_t>(row) * width_cells +
                  col];
  }
};

namespace detail {

struct Luv {
  float l, u, v;
};

inline Luv rgb_to_luv_normalized(std::uint8_t r8, std::uint8_t g8,
                                 std::uint8_t b8) {
  const double r = r8 / 255.0;
  const double g = g8 / 255.0;
  const double b = b8 / 255.0;
  // Linear RGB -> XYZ, D65.
  const double x = 0.412453 * r + 0.357580 * g + 0.180423 * b;
  const double y = 0.212671 * r + 0.715160 * g + 0.072169 * b;
  const double z = 0.019334 * r + 0.119193 * g + 0.950227 * b;
  const double l =
      y > 0.008856 ? 116.0 * std::cbrt(y) - 16.0 : 903.2962962962963 * y;
  // D65 reference chromaticity.
  constexpr double un = 0.1978398248;
  constexpr double vn = 0.4683363029;
  const double denom = x + 15.0 * y + 3.0 * z;
  double up = un, vp = vn;
  if (denom > 0.0) {
    up = 4.0 * x / denom;
    vp = 9.0 * y / denom;
  }
  const double u = 13.0 * l * (up - un);
  const double v = 13.0 * l * (vp - vn);
  Luv out;
  out.l = static_cast<float>(l / 100.0);
  out.u = static_cast<float>((u + 134.0) / 354.0);
  out.v = static_cast<float>((v + 140.0) / 262.0);
  return out;
}

// One pass of the [1 2 1]/4 triangle filter along rows then columns,
// borders replicated. Applied to each aggregated cell plane.
inline void smooth_plane_121(float* p, int w, int h, std::vector<float>& tmp) {
  tmp.resize(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    const float* row = p + static_cast<std::size_t>(y) * w;
    float* out = tmp.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      const float left = row[x > 0 ? x - 1 : 0];
      const float right = row[x < w - 1 ? x + 1 : w - 1];
      out[x] = 0.25f * left + 0.5f * row[x] + 0.25f * right;
    }
  }
  for (int y = 0; y < h; ++y) {
    const float* up = tmp.data() + static_cast<std::size_t>(y > 0 ? y - 1 : 0) * w;
    const float* mid = tmp.data() + static_cast<std::size_t>(y) * w;
    const float* down =
        tmp.data() + static_cast<std::size_t>(y < h - 1 ? y + 1 : h - 1) * w;
    float* out = p + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      out[x] = 0.25f * up[x] + 0.5f * mid[x] + 0.25f * down[x];
    }
  }
}

}  // namespace detail

// Aggregate channel features for one image. Each cell holds the mean of
// its shrink x shrink pixel block, then every plane gets one triangle
// smoothing pass.
inline ChannelStack compute_channels(const Image8& img, int shrink = 4) {
  if (shrink < 1) throw InvalidInputError("compute_channels: shrink must be >= 1");
  if (img.width < shrink || img.height < shrink) {
    throw InvalidInputError("compute_channels: image smaller than one cell");
  }

  ChannelStack stack;
  stack.shrink = shrink;
  stack.width_cells = img.width / shrink;
  stack.height_cells = img.height / shrink;
  stack.values.assign(static_cast<std::size_t>(kChannelCount) *
                          stack.plane_size(),
                      0.0f);

  const int used_w = stack.width_cells * shrink;
  const int used_h = stack.height_cells * shrink;

  std::vector<float> intensity = to_intensity(img);
  const auto idx = [&](int x, int y) {
    return static_cast<std::size_t>(y) * img.width + x;
  };

  constexpr float kBinWidth = 3.14159265358979323846f / kOrientationBins;
  for (int y = 0; y < used_h; ++y) {
    const int row = y / shrink;
    for (int x = 0; x < used_w; ++x) {
      const int col = x / shrink;
      const std::size_t cell = static_cast<std::size_t>(row) * stack.width_cells + col;

      const detail::Luv luv =
          detail::rgb_to_luv_normalized(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
      stack.plane(0)[cell] += luv.l;
      stack.plane(1)[cell] += luv.u;
      stack.plane(2)[cell] += luv.v;

      const int xl = x > 0 ? x - 1 : 0;
      const int xr = x < img.width - 1 ? x + 1 : img.width - 1;
      const int yu = y > 0 ? y - 1 : 0;
      const int yd = y < img.height - 1 ? y + 1 : img.height - 1;
      const float gx = (intensity[idx(xr, y)] - intensity[idx(xl, y)]) * (0.5f / 255.0f);
      const float gy = (intensity[idx(x, yd)] - intensity[idx(x, yu)]) * (0.5f / 255.0f);
      const float mag = std::sqrt(gx * gx + gy * gy);
      stack.plane(kGradMagChannel)[cell] += mag;

      if (mag > 0.0f) {
        float theta = std::atan2(gy, gx);
        if (theta < 0.0f) theta += 3.14159265358979323846f;
        if (theta >= 3.14159265358979323846f) theta = 0.0f;
        const float pos = theta / kBinWidth;
        int b0 = static_cast<int>(pos);
        if (b0 >= kOrientationBins) b0 = kOrientationBins - 1;
        const float frac = pos - b0;
        const int b1 = (b0 + 1) % kOrientationBins;
        stack.plane(kFirstOrientChannel + b0)[cell] += mag * (1.0f - frac);
        stack.plane(kFirstOrientChannel + b1)[cell] += mag * frac;
      }
    }
  }

  const float inv_block = 1.0f / (static_cast<float>(shrink) * shrink);
  for (auto& v : stack.values) v *= inv_block;

  std::vector<float> tmp;
  for (int c = 0; c < kChannelCount; ++c) {
    detail::smooth_plane_121(stack.plane(c), stack.width_cells,
                             stack.height_cells, tmp);
  }
  return stack;
}

struct PyramidLevel {
  double scale = 1.0;
  ChannelStack stack;
};

// Multi-scale stack sequence; scales decrease geometrically from 1.0.
struct FeaturePyramid {
  int image_width = 0;
  int image_height = 0;
  std::vector<PyramidLevel> levels;
};

struct PyramidConfig {
  int scales_per_octave = 8;
  WindowSize min_window{64, 128};
  int shrink = 4;
};

// Levels at 2^(-k / scales_per_octave) for k = 0, 1, ... while the
// resampled image still contains min_window. Level 0 reuses the input
// image directly, so its stack is identical to compute_channels(image).
inline FeaturePyramid build_pyramid(const Image8& img, const PyramidConfig& cfg) {
  if (cfg.scales_per_octave < 1) {
    throw InvalidInputError("build_pyramid: scales_per_octave must be >= 1");
  }
  if (cfg.min_window.w < 1 || cfg.min_window.h < 1) {
    throw InvalidInputError("build_pyramid: bad min_window");
  }
  if (img.width < cfg.min_window.w || img.height < cfg.min_window.h) {
    throw InvalidInputError("build_pyramid: image smaller than min_window");
  }

  FeaturePyramid pyr;
  pyr.image_width = img.width;
  pyr.image_height = img.height;
  for (int k = 0;; ++k) {
    const double scale = std::exp2(-static_cast<double>(k) / cfg.scales_per_octave);
    const int rw = k == 0 ? img.width
                          : static_cast<int>(std::floor(img.width * scale));
    const int rh = k == 0 ? img.height
                          : static_cast<int>(std::floor(img.height * scale));
    if (rw < cfg.min_window.w || rh < cfg.min_window.h) break;
    PyramidLevel level;
    level.scale = scale;
    if (k == 0) {
      level.stack = compute_channels(img, cfg.shrink);
    } else {
      level.stack = compute_channels(resize_bilinear(img, rw, rh), cfg.shrink);
    }
    pyr.levels.push_back(std::move(level));
  }
  return pyr;
}

}  // namespace placedet
