#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "placedet/box.hpp"
#include "placedet/dataio.hpp"
#include "placedet/detail/rng.hpp"
#include "placedet/errors.hpp"
#include "placedet/image.hpp"

namespace placedet::synth {

// Deterministic desk-scale route generator.
//
// The route is a loop split into n_places segments. Each place renders a
// distinct background texture family (an oriented low-contrast grating
// plus seeded noise). Pedestrians are bright articulated-rectangle
// figures with two interior intensity regions (upper body, legs) planted
// with per-frame probability and recorded as ground truth.
//
// Every place also plants one unlabeled "distractor" figure per frame:
// the same figure geometry with different interior intensities. The three
// distractor intensity pairs form a triangle in (upper, lower) intensity
// space whose strict interior contains the pedestrian's pair, so:
//   - against any single place's distractors a linear model on channel
//     features separates pedestrians cleanly (the pair sits well off the
//     line through any two vertices), while
//   - against the union of all three distractor families no linear model
//     can succeed: the pedestrian's features are a convex combination of
//     distractor features, so its score can never exceed all of theirs.
// This is what makes narrow place-fitted models separable where a
// full-route model is not.
struct SynthConfig {
  int n_places = 3;
  int frames_per_place = 100;
  int n_laps = 2;
  double pose_noise_sigma = 0.34;  // metres; cross-lap median distance ~0.4 m
  double pedestrian_rate = 0.6;
  std::uint64_t rng_seed = 0;
  WindowSize image_size{256, 192};
  WindowSize figure_size{64, 128};  // matches the detector window geometry
  int n_positive_crops = 150;
  int n_negative_images = 20;
};

namespace detail_synth {

inline constexpr double kPi = 3.14159265358979323846;

// Pedestrian interior intensities and the three distractor vertices.
inline constexpr double kSpriteUpper = 128.0, kSpriteLower = 128.0;
inline constexpr double kDistractorUpper[3] = {176.0, 104.0, 104.0};
inline constexpr double kDistractorLower[3] = {104.0, 176.0, 104.0};

// Low-contrast oriented grating: base 40, amplitude 20, plus +-2 noise.
// Orientation and wavelength are the place signature (what GIST and
// mutual information key on); everything stays well below the figure
// interiors so the background never outshines a pedestrian.
inline void fill_place_texture(Image8& img, int place, placedet::detail::Rng& rng) {
  const double angle = kPi * (place % 3) / 3.0;
  constexpr double kWavelengths[3] = {9.0, 12.0, 16.0};
  const double wavelength = kWavelengths[place % 3];
  const double kx = std::cos(angle) * (2.0 * kPi / wavelength);
  const double ky = std::sin(angle) * (2.0 * kPi / wavelength);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double wave = 20.0 * std::sin(kx * x + ky * y);
      const double noise = rng.uniform(-2.0, 2.0);
      const int v = std::clamp(static_cast<int>(std::lround(40.0 + wave + noise)),
                               0, 255);
      img.set(x, y, static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v),
              static_cast<std::uint8_t>(v));
    }
  }
}

struct RegionRect {
  double x0, y0, x1, y1;  // unit coordinates inside the figure box
  bool upper;
};

// Head + torso form the upper region, the two legs the lower one.
inline const std::vector<RegionRect>& figure_layout() {
  static const std::vector<RegionRect> layout = {
      {0.32, 0.03, 0.68, 0.17, true},   // head
      {0.18, 0.17, 0.82, 0.56, true},   // torso
      {0.20, 0.56, 0.44, 0.97, false},  // left leg
      {0.56, 0.56, 0.80, 0.97, false},  // right leg
  };
  return layout;
}

inline void draw_figure(Image8& img, const BoundingBox& box, double upper,
                        double lower, placedet::detail::Rng& rng) {
  const int x_lo = std::max(0, static_cast<int>(std::floor(box.x)));
  const int y_lo = std::max(0, static_cast<int>(std::floor(box.y)));
  const int x_hi = std::min(img.width, static_cast<int>(std::ceil(box.x2())));
  const int y_hi = std::min(img.height, static_cast<int>(std::ceil(box.y2())));
  for (int y = y_lo; y < y_hi; ++y) {
    const double uy = (y + 0.5 - box.y) / box.h;
    for (int x = x_lo; x < x_hi; ++x) {
      const double ux = (x + 0.5 - box.x) / box.w;
      for (const auto& r : figure_layout()) {
        if (ux >= r.x0 && ux < r.x1 && uy >= r.y0 && uy < r.y1) {
          const double fill = (r.upper ? upper : lower) + rng.uniform(-3.0, 3.0);
          const int v = std::clamp(static_cast<int>(std::lround(fill)), 0, 255);
          img.set(x, y, static_cast<std::uint8_t>(v),
                  static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v));
          break;
        }
      }
    }
  }
}

// Rejection-sampled placement fully inside the image, not overlapping any
// box already placed. Returns an invalid box when placement fails.
inline BoundingBox sample_placement(placedet::detail::Rng& rng, WindowSize image,
                                    WindowSize figure,
                                    const std::vector<BoundingBox>& taken) {
  for (int attempt = 0; attempt < 40; ++attempt) {
    const double scale = rng.uniform(1.0, 1.35);
    const double w = figure.w * scale;
    const double h = figure.h * scale;
    if (w + 2 > image.w || h + 2 > image.h) continue;
    const double x = rng.uniform(1.0, image.w - w - 1.0);
    const double y = rng.uniform(1.0, image.h - h - 1.0);
    const BoundingBox box{x, y, w, h};
    bool clear = true;
    for (const auto& other : taken) {
      const BoundingBox padded{other.x - 4, other.y - 4, other.w + 8, other.h + 8};
      if (intersection_area(box, padded) > 0.0) {
        clear = false;
        break;
      }
    }
    if (clear) return box;
  }
  return BoundingBox{};
}

}  // namespace detail_synth

// Generates the dataset under `root` (frames + manifests + positive crops
// + negative images) and returns it loaded. Fully deterministic from
// cfg.rng_seed.
inline dataio::Dataset generate_synthetic(const SynthConfig& cfg,
                                          const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (cfg.n_places < 1 || cfg.frames_per_place < 1 || cfg.n_laps < 1 ||
      cfg.n_positive_crops < 1 || cfg.n_negative_images < 1) {
    throw InvalidInputError("generate_synthetic: counts must be >= 1");
  }
  if (cfg.pedestrian_rate < 0.0 || cfg.pedestrian_rate > 1.0) {
    throw InvalidInputError("generate_synthetic: pedestrian_rate must be in [0,1]");
  }
  if (cfg.figure_size.w + 2 > cfg.image_size.w ||
      static_cast<int>(cfg.figure_size.h * 1.35) + 2 > cfg.image_size.h) {
    throw InvalidInputError("generate_synthetic: image too small for figure");
  }

  fs::create_directories(root / "frames");
  fs::create_directories(root / "positives");
  fs::create_directories(root / "negatives");

  dataio::Dataset ds;
  ds.root = root;

  const int per_lap = cfg.n_places * cfg.frames_per_place;
  const double step_m = 1.0;
  const double radius = per_lap * step_m / (2.0 * detail_synth::kPi);

  char name[64];
  for (int lap = 0; lap < cfg.n_laps; ++lap) {
    for (int i = 0; i < per_lap; ++i) {
      const std::int64_t frame_id = static_cast<std::int64_t>(lap) * per_lap + i;
      const int place = i / cfg.frames_per_place;

      placedet::detail::Rng rng(
          placedet::detail::derive_seed(cfg.rng_seed, 0xf7a3e, lap, i));
      Image8 img(cfg.image_size.w, cfg.image_size.h);
      detail_synth::fill_place_texture(img, place, rng);

      std::vector<BoundingBox> taken;
      const bool has_pedestrian = rng.bernoulli(cfg.pedestrian_rate);

      const BoundingBox distractor_box = detail_synth::sample_placement(
          rng, cfg.image_size, cfg.figure_size, taken);
      if (distractor_box.valid()) taken.push_back(distractor_box);

      BoundingBox sprite_box;
      if (has_pedestrian) {
        sprite_box = detail_synth::sample_placement(rng, cfg.image_size,
                                                    cfg.figure_size, taken);
      }

      if (distractor_box.valid()) {
        detail_synth::draw_figure(img, distractor_box,
                                  detail_synth::kDistractorUpper[place % 3],
                                  detail_synth::kDistractorLower[place % 3], rng);
      }
      std::vector<BoundingBox> gt;
      if (sprite_box.valid()) {
        detail_synth::draw_figure(img, sprite_box, detail_synth::kSpriteUpper,
                                  detail_synth::kSpriteLower, rng);
        gt.push_back(sprite_box);
      }

      std::snprintf(name, sizeof(name), "frames/frame_%06lld.png",
                    static_cast<long long>(frame_id));
      dataio::write_png(root / name, img);

      placedet::detail::Rng pose_rng(
          placedet::detail::derive_seed(cfg.rng_seed, 0x905e5, lap, i));
      const double angle = 2.0 * detail_synth::kPi * i / per_lap;
      bank::FrameRecord f;
      f.frame_id = frame_id;
      f.lap_id = lap;
      f.timestamp_us = frame_id * 250000;
      f.x_m = radius * std::cos(angle);
      f.y_m = radius * std::sin(angle);
      f.heading_rad = angle + detail_synth::kPi / 2.0;
      if (lap > 0) {
        // Cross-lap localisation noise, rejection-sampled to keep the
        // displacement magnitude under 3 sigma (the tails do not model
        // anything useful and the bound makes retrieval errors bounded).
        double nx = 0.0, ny = 0.0;
        do {
          nx = pose_rng.normal(0.0, cfg.pose_noise_sigma);
          ny = pose_rng.normal(0.0, cfg.pose_noise_sigma);
        } while (nx * nx + ny * ny >
                 8.8 * cfg.pose_noise_sigma * cfg.pose_noise_sigma);
        f.x_m += nx;
        f.y_m += ny;
        f.heading_rad += pose_rng.normal(0.0, 0.01);
      }
      f.image_relpath = name;
      ds.frames.push_back(f);
      ds.annotations.emplace(frame_id, std::move(gt));
    }
  }

  // Canonical positive crops: the figure at roughly unit scale, centered
  // with small jitter, over each place's texture in turn.
  for (int j = 0; j < cfg.n_positive_crops; ++j) {
    placedet::detail::Rng rng(
        placedet::detail::derive_seed(cfg.rng_seed, 0x9051f, j));
    Image8 crop(cfg.figure_size.w, cfg.figure_size.h);
    detail_synth::fill_place_texture(crop, j % cfg.n_places, rng);
    const double scale = rng.uniform(0.94, 1.0);
    const double w = cfg.figure_size.w * scale;
    const double h = cfg.figure_size.h * scale;
    const double x = (cfg.figure_size.w - w) / 2.0 + rng.uniform(-2.0, 2.0);
    const double y = (cfg.figure_size.h - h) / 2.0 + rng.uniform(-2.0, 2.0);
    detail_synth::draw_figure(crop, BoundingBox{x, y, w, h},
                              detail_synth::kSpriteUpper,
                              detail_synth::kSpriteLower, rng);
    std::snprintf(name, sizeof(name), "positives/pos_%04d.png", j);
    dataio::write_png(root / name, crop);
    ds.positives.push_back(name);
  }

  // Figure-free images for seeding the negative set.
  for (int j = 0; j < cfg.n_negative_images; ++j) {
    placedet::detail::Rng rng(
        placedet::detail::derive_seed(cfg.rng_seed, 0x23e61, j));
    Image8 img(cfg.image_size.w, cfg.image_size.h);
    detail_synth::fill_place_texture(img, j % cfg.n_places, rng);
    std::snprintf(name, sizeof(name), "negatives/neg_%04d.png", j);
    dataio::write_png(root / name, img);
    ds.negative_images.push_back(name);
  }

  dataio::save_dataset(ds, root);
  return ds;
}

}  // namespace placedet::synth
