#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "placedet/dataio.hpp"
#include "placedet/detail/parallel.hpp"
#include "placedet/detail/rng.hpp"
#include "placedet/detail/text.hpp"
#include "placedet/detector.hpp"
#include "placedet/errors.hpp"
#include "placedet/eval.hpp"
#include "placedet/mining.hpp"
#include "placedet/placebank.hpp"
#include "placedet/similarity.hpp"
#include "placedet/synth.hpp"

namespace placedet::pipeline {

inline Image8 crop(const Image8& src, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > src.width ||
      y + h > src.height) {
    throw InvalidInputError("crop: rectangle outside image");
  }
  Image8 out(w, h);
  for (int yy = 0; yy < h; ++yy) {
    const std::uint8_t* s =
        src.pixels.data() + 3 * (static_cast<std::size_t>(y + yy) * src.width + x);
    std::uint8_t* d = out.pixels.data() + 3 * static_cast<std::size_t>(yy) * w;
    std::copy(s, s + 3 * static_cast<std::size_t>(w), d);
  }
  return out;
}

// Channel features of a single window-sized image (resized if needed),
// flattened in the detector's order.
inline std::vector<float> window_features(const Image8& img, WindowSize window,
                                          int shrink) {
  detector::validate_window(window, shrink);
  const Image8* use = &img;
  Image8 resized;
  if (img.width != window.w || img.height != window.h) {
    resized = resize_bilinear(img, window.w, window.h);
    use = &resized;
  }
  const ChannelStack stack = compute_channels(*use, shrink);
  std::vector<float> feat;
  detector::extract_window(stack, 0, 0, window, feat);
  return feat;
}

inline mining::FeatureSet load_positive_features(const dataio::Dataset& ds,
                                                 WindowSize window, int shrink,
                                                 int jobs = 0) {
  if (ds.positives.empty()) {
    throw DegenerateDataError("dataset has no positive crops");
  }
  mining::FeatureSet set;
  std::vector<std::vector<float>> rows(ds.positives.size());
  placedet::detail::parallel_for(
      ds.positives.size(), jobs > 0 ? jobs : placedet::detail::default_jobs(),
      [&](std::size_t i) {
        rows[i] = window_features(ds.load_image(ds.positives[i]), window, shrink);
      });
  for (auto& r : rows) set.add(r);
  return set;
}

// Seed negatives: k random window-aspect patches from each designated
// negative image, resized to the window. Deterministic per (seed, image).
inline mining::FeatureSet sample_seed_negatives(const dataio::Dataset& ds,
                                                WindowSize window, int shrink,
                                                int patches_per_image,
                                                std::uint64_t seed,
                                                int jobs = 0) {
  if (ds.negative_images.empty()) {
    throw DegenerateDataError("dataset has no negative images");
  }
  mining::FeatureSet set;
  std::vector<std::vector<std::vector<float>>> rows(ds.negative_images.size());
  placedet::detail::parallel_for(
      ds.negative_images.size(),
      jobs > 0 ? jobs : placedet::detail::default_jobs(), [&](std::size_t i) {
        const Image8 img = ds.load_image(ds.negative_images[i]);
        placedet::detail::Rng rng(
            placedet::detail::derive_seed(seed, 0x5eed, i));
        const double max_scale =
            std::min(static_cast<double>(img.width) / window.w,
                     static_cast<double>(img.height) / window.h);
        if (max_scale < 1.0) {
          throw InvalidInputError("negative image '" + ds.negative_images[i] +
                                  "' smaller than the model window");
        }
        for (int k = 0; k < patches_per_image; ++k) {
          const double s = rng.uniform(1.0, max_scale);
          const int pw = static_cast<int>(std::lround(window.w * s));
          const int ph = static_cast<int>(std::lround(window.h * s));
          const int cw = std::min(pw, img.width);
          const int ch = std::min(ph, img.height);
          const int x = rng.uniform_int(0, img.width - cw);
          const int y = rng.uniform_int(0, img.height - ch);
          rows[i].push_back(
              window_features(crop(img, x, y, cw, ch), window, shrink));
        }
      });
  for (auto& img_rows : rows) {
    for (auto& r : img_rows) set.add(r);
  }
  return set;
}

// Shared, lazily computed channel pyramids keyed by frame id. Thread-safe;
// a pyramid is computed once per frame no matter how many swathes use it.
class PyramidCache {
public:
  PyramidCache(const dataio::Dataset& ds, const PyramidConfig& cfg)
      : ds_(ds), cfg_(cfg) {}

  std::shared_ptr<const FeaturePyramid> get(std::int64_t frame_id) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(frame_id);
      if (it != cache_.end()) return it->second;
    }
    const auto& frame = ds_.frame(frame_id);
    auto pyr = std::make_shared<FeaturePyramid>(
        build_pyramid(ds_.load_image(frame.image_relpath), cfg_));
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, inserted] = cache_.emplace(frame_id, std::move(pyr));
    return it->second;
  }

  void clear() {
    std::lock_guard<std::mutex> lock(mu_);
    cache_.clear();
  }

private:
  const dataio::Dataset& ds_;
  PyramidConfig cfg_;
  std::mutex mu_;
  std::map<std::int64_t, std::shared_ptr<const FeaturePyramid>> cache_;
};

// Similarity matrix over one ordered frame list.
inline similarity::SimilarityMatrix frames_similarity(
    const dataio::Dataset& ds, const std::vector<bank::FrameRecord>& frames,
    similarity::Metric metric, const similarity::SimilarityConfig& cfg = {}) {
  return similarity::similarity_matrix(
      static_cast<int>(frames.size()), metric,
      [&](int i) { return ds.load_image(frames[i].image_relpath); }, cfg);
}

inline bank::ModelBank build_bank_for_lap(const dataio::Dataset& ds, int lap_id,
                                          const bank::BankConfig& config,
                                          const mining::FeatureSet& positives,
                                          const mining::FeatureSet& seeds,
                                          PyramidCache& pyramids, int jobs = 0,
                                          const similarity::SimilarityMatrix* sim = nullptr) {
  bank::BankBuildContext ctx;
  ctx.frames = ds.lap_frames(lap_id);
  if (ctx.frames.empty()) {
    throw DegenerateDataError("lap " + std::to_string(lap_id) + " has no frames");
  }
  for (const auto& f : ctx.frames) ctx.annotations[f.frame_id] = ds.annotations.at(f.frame_id);
  ctx.positives = positives;
  ctx.seed_negatives = seeds;
  ctx.pyramid_of = [&pyramids](std::int64_t id) { return pyramids.get(id); };
  ctx.jobs = jobs;

  similarity::SimilarityMatrix local_sim;
  if (config.method != bank::SwatheMethod::temporal) {
    if (sim != nullptr) {
      ctx.sim = sim;
    } else {
      local_sim = frames_similarity(ds, ctx.frames,
                                    config.method == bank::SwatheMethod::gist
                                        ? similarity::Metric::gist_l2
                                        : similarity::Metric::mutual_information);
      ctx.sim = &local_sim;
    }
  }
  return bank::build_bank(ctx, config);
}

// ---------------------------------------------------------------------------
// Detection runs and their CSV form (frame_id,x,y,w,h,score).

struct FrameDetections {
  std::int64_t frame_id = 0;
  std::int64_t matched_map_frame = -1;  // bank retrieval, -1 for single models
  std::vector<detector::Detection> detections;
};

inline std::string detections_to_csv(const std::vector<FrameDetections>& all) {
  std::string out = "frame_id,x,y,w,h,score\n";
  for (const auto& fd : all) {
    for (const auto& d : fd.detections) {
      out += placedet::detail::format_i64(fd.frame_id);
      out += ',';
      out += placedet::detail::format_double(d.box.x);
      out += ',';
      out += placedet::detail::format_double(d.box.y);
      out += ',';
      out += placedet::detail::format_double(d.box.w);
      out += ',';
      out += placedet::detail::format_double(d.box.h);
      out += ',';
      out += placedet::detail::format_double(d.score);
      out += '\n';
    }
  }
  return out;
}

inline std::map<std::int64_t, std::vector<detector::Detection>> detections_from_csv(
    const std::string& bytes) {
  std::map<std::int64_t, std::vector<detector::Detection>> out;
  std::size_t pos = 0;
  bool header = true;
  while (pos < bytes.size()) {
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string::npos) eol = bytes.size();
    const auto line = placedet::detail::strip_cr(
        std::string_view(bytes).substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto fields = placedet::detail::split_csv(line);
    if (fields.size() != 6) {
      throw FormatError("detections csv: expected 6 fields in '" +
                        std::string(line) + "'");
    }
    detector::Detection d;
    const std::int64_t frame_id = placedet::detail::parse_i64(fields[0], "detections csv");
    d.box.x = placedet::detail::parse_double(fields[1], "detections csv");
    d.box.y = placedet::detail::parse_double(fields[2], "detections csv");
    d.box.w = placedet::detail::parse_double(fields[3], "detections csv");
    d.box.h = placedet::detail::parse_double(fields[4], "detections csv");
    d.score = placedet::detail::parse_double(fields[5], "detections csv");
    out[frame_id].push_back(d);
  }
  return out;
}

// Detect over a set of frames with per-frame model retrieval from a bank
// built on another lap. A shared pyramid cache avoids recomputing channel
// features when several configurations visit the same frames.
inline std::vector<FrameDetections> detect_with_bank(
    const dataio::Dataset& ds, const std::vector<bank::FrameRecord>& query_frames,
    const bank::ModelBank& model_bank, const detector::DetectConfig& dcfg,
    const PyramidConfig& pcfg, int jobs = 0, PyramidCache* cache = nullptr) {
  std::vector<FrameDetections> out(query_frames.size());
  placedet::detail::parallel_for(
      query_frames.size(), jobs > 0 ? jobs : placedet::detail::default_jobs(),
      [&](std::size_t i) {
        const auto& f = query_frames[i];
        const bank::BankEntry& entry = bank::retrieve_model(model_bank, f.x_m, f.y_m);
        out[i].frame_id = f.frame_id;
        out[i].matched_map_frame = entry.frame_id;
        if (cache != nullptr) {
          out[i].detections =
              detector::detect_on_pyramid(*cache->get(f.frame_id), entry.model, dcfg);
        } else {
          out[i].detections = detector::detect(ds.load_image(f.image_relpath),
                                               entry.model, dcfg, pcfg);
        }
      });
  return out;
}

inline std::vector<FrameDetections> detect_with_model(
    const dataio::Dataset& ds, const std::vector<bank::FrameRecord>& query_frames,
    const svm::LinearModel& model, const detector::DetectConfig& dcfg,
    const PyramidConfig& pcfg, int jobs = 0, PyramidCache* cache = nullptr) {
  std::vector<FrameDetections> out(query_frames.size());
  placedet::detail::parallel_for(
      query_frames.size(), jobs > 0 ? jobs : placedet::detail::default_jobs(),
      [&](std::size_t i) {
        const auto& f = query_frames[i];
        out[i].frame_id = f.frame_id;
        if (cache != nullptr) {
          out[i].detections =
              detector::detect_on_pyramid(*cache->get(f.frame_id), model, dcfg);
        } else {
          out[i].detections = detector::detect(ds.load_image(f.image_relpath),
                                               model, dcfg, pcfg);
        }
      });
  return out;
}

inline eval::EvalResult evaluate_detections(
    const dataio::Dataset& ds, const std::vector<FrameDetections>& runs,
    double iou_min = 0.5) {
  std::vector<eval::FrameGroundTruth> frames;
  frames.reserve(runs.size());
  for (const auto& fd : runs) {
    eval::FrameGroundTruth fg;
    fg.detections = fd.detections;
    fg.ground_truth = ds.annotations.at(fd.frame_id);
    frames.push_back(std::move(fg));
  }
  return eval::evaluate(frames, iou_min);
}

// Generic-data baseline: hard negative mining restricted to the designated
// negative images (no route frames involved).
inline mining::HnmResult train_generic(const dataio::Dataset& ds,
                                       const mining::FeatureSet& positives,
                                       const mining::FeatureSet& seeds,
                                       const mining::HnmConfig& cfg) {
  std::vector<mining::MiningFrame> frames;
  PyramidConfig pcfg = cfg.pyramid;
  pcfg.min_window = cfg.detect.window;
  for (std::size_t i = 0; i < ds.negative_images.size(); ++i) {
    mining::MiningFrame mf;
    mf.frame_id = static_cast<std::int64_t>(i);
    mf.pyramid = std::make_shared<FeaturePyramid>(
        build_pyramid(ds.load_image(ds.negative_images[i]), pcfg));
    frames.push_back(std::move(mf));
  }
  return mining::train_with_hnm(positives, seeds, frames, cfg);
}

}  // namespace placedet::pipeline
