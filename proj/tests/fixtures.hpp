// Hand-built scenes shared between the mining unit tests and the
// acceptance suite.
#pragma once

#include <memory>
#include <vector>

#include "placedet/detail/rng.hpp"
#include "placedet/mining.hpp"

namespace fixtures {

inline constexpr placedet::WindowSize kWin{32, 64};

inline void fill_noise(placedet::Image8& img, placedet::detail::Rng& rng,
                       int lo = 20, int hi = 60) {
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto v = static_cast<std::uint8_t>(rng.uniform_int(lo, hi));
      img.set(x, y, v, v, v);
    }
  }
}

// Bright figure: solid block, with an optional dark band in the middle.
// The band is the feature separating "pedestrians" from distractors.
inline void draw_block(placedet::Image8& img, int x0, int y0, int w, int h,
                       bool with_band, placedet::detail::Rng& rng) {
  for (int y = y0; y < y0 + h && y < img.height; ++y) {
    for (int x = x0; x < x0 + w && x < img.width; ++x) {
      const double fy = static_cast<double>(y - y0) / h;
      const bool band = with_band && fy >= 0.44 && fy < 0.56;
      const int v = band ? rng.uniform_int(25, 35) : rng.uniform_int(190, 210);
      img.set(x, y, static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v),
              static_cast<std::uint8_t>(v));
    }
  }
}

inline placedet::mining::FeatureSet crops_features(int n, std::uint64_t seed,
                                                   bool with_band) {
  placedet::mining::FeatureSet set;
  std::vector<float> feat;
  for (int i = 0; i < n; ++i) {
    placedet::detail::Rng rng(placedet::detail::derive_seed(seed, i));
    placedet::Image8 img(kWin.w, kWin.h);
    fill_noise(img, rng);
    if (with_band) draw_block(img, 3, 3, kWin.w - 6, kWin.h - 6, true, rng);
    const placedet::ChannelStack stack = placedet::compute_channels(img, 4);
    placedet::detector::extract_window(stack, 0, 0, kWin, feat);
    set.add(feat);
  }
  return set;
}

inline placedet::mining::MiningFrame make_frame(
    const placedet::Image8& img, std::vector<placedet::BoundingBox> gt,
    std::int64_t id, const placedet::mining::HnmConfig& cfg) {
  placedet::PyramidConfig pcfg = cfg.pyramid;
  pcfg.min_window = cfg.detect.window;
  placedet::mining::MiningFrame f;
  f.frame_id = id;
  f.pyramid = std::make_shared<placedet::FeaturePyramid>(
      placedet::build_pyramid(img, pcfg));
  f.ground_truth = std::move(gt);
  return f;
}

inline placedet::mining::HnmConfig hnm_config() {
  placedet::mining::HnmConfig cfg;
  cfg.detect.window = kWin;
  cfg.detect.stride_cells = 2;
  cfg.pyramid.min_window = kWin;
  return cfg;
}

// A separable scene: three band-less distractors plus one labeled figure.
// The seed model fires on the distractors; a few mining rounds put every
// window below the mining threshold.
struct MineableFixture {
  placedet::mining::HnmConfig cfg = hnm_config();
  placedet::mining::FeatureSet positives = crops_features(10, 300, true);
  placedet::mining::FeatureSet seeds = crops_features(10, 400, false);
  placedet::mining::MiningFrame frame;

  MineableFixture() {
    placedet::detail::Rng rng(5);
    placedet::Image8 img(160, 128);
    fill_noise(img, rng);
    draw_block(img, 8, 20, 32, 64, false, rng);
    draw_block(img, 64, 40, 32, 64, false, rng);
    draw_block(img, 120, 10, 32, 64, false, rng);
    placedet::Image8 with_sprite = img;
    draw_block(with_sprite, 48, 2, 32, 64, true, rng);
    frame = make_frame(with_sprite, {{48, 2, 32, 64}}, 7, cfg);
  }
};

// An inseparable scene: one rendered figure patch (8 px context apron)
// blitted on a grid so all figure windows have bit-identical features.
// Four figures are labeled and supply the positives; 28 stay unlabeled.
// Class balance keeps the duplicated vector on the positive side, so the
// unlabeled copies score high forever and outlast the iteration cap.
struct InseparableFixture {
  placedet::mining::HnmConfig cfg = hnm_config();
  placedet::mining::FeatureSet positives;
  placedet::mining::FeatureSet seeds = crops_features(6, 600, false);
  placedet::mining::MiningFrame frame;

  InseparableFixture() {
    cfg.per_image_cap = 1;
    cfg.pyramid.scales_per_octave = 2;
    placedet::detail::Rng rng(6);
    placedet::Image8 patch(48, 80);
    fill_noise(patch, rng);
    draw_block(patch, 8, 8, kWin.w, kWin.h, true, rng);

    placedet::Image8 img(384, 320);
    fill_noise(img, rng);
    std::vector<placedet::BoundingBox> gt;
    for (int cy = 0; cy < 4; ++cy) {
      for (int cx = 0; cx < 8; ++cx) {
        const int px = 48 * cx, py = 80 * cy;
        for (int y = 0; y < 80; ++y) {
          for (int x = 0; x < 48; ++x) {
            img.set(px + x, py + y, patch.at(x, y, 0), patch.at(x, y, 1),
                    patch.at(x, y, 2));
          }
        }
        if (cy == 0 && cx < 4) {
          gt.push_back({static_cast<double>(px + 8),
                        static_cast<double>(py + 8), 32, 64});
        }
      }
    }
    frame = make_frame(img, gt, 42, cfg);
    std::vector<float> feat;
    for (int cx = 0; cx < 4; ++cx) {
      placedet::detector::extract_window(frame.pyramid->levels[0].stack, 2,
                                         2 + 12 * cx, kWin, feat);
      positives.add(feat);
    }
  }
};

}  // namespace fixtures
