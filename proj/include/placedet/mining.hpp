#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <set>
#include <tuple>
#include <vector>

#include "placedet/box.hpp"
#include "placedet/detector.hpp"
#include "placedet/errors.hpp"
#include "placedet/svm.hpp"

namespace placedet::mining {

struct HnmConfig {
  int max_iterations = 20;
  int per_image_cap = 10;        // top-k false positives kept per image per round
  double fp_iou_max = 0.5;       // windows at or above this IoU with GT are not mined
  double mining_score_min = -1.0;
  int seed_patches_per_negative_image = 10;
  svm::SvmConfig svm;
  detector::DetectConfig detect;
  PyramidConfig pyramid;
};

struct HnmReport {
  int iterations_run = 0;
  std::vector<int> new_negatives_per_iteration;
  bool converged = false;
  double final_objective = 0.0;
  int final_training_errors = 0;
};

// Discrete identity of a scored window; deduplication key for the mined
// negative set.
struct WindowKey {
  std::int64_t frame_id = 0;
  int level = 0;
  int row = 0;
  int col = 0;

  friend auto operator<=>(const WindowKey&, const WindowKey&) = default;
};

struct MinedWindow {
  WindowKey key;
  std::vector<float> features;
  double score = 0.0;
  BoundingBox box;  // original-image coordinates
};

// One annotated training frame, with its feature pyramid shared so
// repeated mining rounds do not recompute channels.
struct MiningFrame {
  std::int64_t frame_id = 0;
  std::shared_ptr<const FeaturePyramid> pyramid;
  std::vector<BoundingBox> ground_truth;
};

namespace detail_hnm {

struct Candidate {
  double score;
  int level, row, col;
  BoundingBox box;
};

// Every qualifying false-positive placement (score at or above the mining
// threshold, below the IoU gate against ground truth), sorted by
// descending score with a deterministic positional tie-break.
inline std::vector<Candidate> qualifying_windows(const svm::LinearModel& model,
                                                 const MiningFrame& frame,
                                                 const HnmConfig& cfg) {
  std::vector<Candidate> candidates;
  const auto& pyr = *frame.pyramid;
  const WindowSize window = cfg.detect.window;
  detector::validate_window(window, cfg.pyramid.shrink);
  const int wc = window.w / cfg.pyramid.shrink;
  const int hc = window.h / cfg.pyramid.shrink;
  if (model.feature_dim != wc * hc * kChannelCount ||
      static_cast<int>(model.weights.size()) != model.feature_dim) {
    throw DimensionError("mine_hard_negatives: model/window dimension mismatch");
  }

  for (std::size_t li = 0; li < pyr.levels.size(); ++li) {
    const auto& level = pyr.levels[li];
    const ChannelStack& stack = level.stack;
    if (stack.width_cells < wc || stack.height_cells < hc) continue;
    for (int row = 0; row + hc <= stack.height_cells; row += cfg.detect.stride_cells) {
      for (int col = 0; col + wc <= stack.width_cells; col += cfg.detect.stride_cells) {
        const double s =
            detector::score_window_at(stack, model, row, col, window);
        if (s < cfg.mining_score_min) continue;
        BoundingBox local{static_cast<double>(col * stack.shrink),
                          static_cast<double>(row * stack.shrink),
                          static_cast<double>(window.w),
                          static_cast<double>(window.h)};
        BoundingBox box = detector::detail::to_image_coords(
            local, level.scale, pyr.image_width, pyr.image_height);
        bool is_fp = true;
        for (const auto& gt : frame.ground_truth) {
          if (iou(box, gt) >= cfg.fp_iou_max) {
            is_fp = false;
            break;
          }
        }
        if (is_fp) {
          candidates.push_back({s, static_cast<int>(li), row, col, box});
        }
      }
    }
  }

  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.score != b.score) return a.score > b.score;
              return std::tie(a.level, a.row, a.col) <
                     std::tie(b.level, b.row, b.col);
            });
  return candidates;
}

inline MinedWindow to_mined(const Candidate& c, const MiningFrame& frame,
                            WindowSize window) {
  MinedWindow mw;
  mw.key = WindowKey{frame.frame_id, c.level, c.row, c.col};
  mw.score = c.score;
  mw.box = c.box;
  detector::extract_window(frame.pyramid->levels[c.level].stack, c.row, c.col,
                           window, mw.features);
  return mw;
}

}  // namespace detail_hnm

// Pre-NMS mining pass over one frame: every window placement scoring at or
// above mining_score_min whose IoU with every ground-truth box stays below
// fp_iou_max, top per_image_cap by descending score.
inline std::vector<MinedWindow> mine_hard_negatives(
    const svm::LinearModel& model, const MiningFrame& frame,
    const HnmConfig& cfg) {
  auto candidates = detail_hnm::qualifying_windows(model, frame, cfg);
  if (static_cast<int>(candidates.size()) > cfg.per_image_cap) {
    candidates.resize(cfg.per_image_cap);
  }
  std::vector<MinedWindow> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) {
    out.push_back(detail_hnm::to_mined(c, frame, cfg.detect.window));
  }
  return out;
}

inline std::vector<MinedWindow> mine_hard_negatives(
    const svm::LinearModel& model, const Image8& image,
    const std::vector<BoundingBox>& ground_truth, const HnmConfig& cfg,
    std::int64_t frame_id = 0) {
  PyramidConfig pcfg = cfg.pyramid;
  pcfg.min_window = cfg.detect.window;
  MiningFrame frame;
  frame.frame_id = frame_id;
  frame.pyramid = std::make_shared<FeaturePyramid>(build_pyramid(image, pcfg));
  frame.ground_truth = ground_truth;
  return mine_hard_negatives(model, frame, cfg);
}

// Feature matrix of fixed-dimension window features.
struct FeatureSet {
  int dim = 0;
  std::vector<float> rows;

  int size() const {
    return dim == 0 ? 0 : static_cast<int>(rows.size()) / dim;
  }
  std::span<const float> row(int i) const {
    return {rows.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }
  void add(std::span<const float> x) {
    if (dim == 0) dim = static_cast<int>(x.size());
    if (static_cast<int>(x.size()) != dim) {
      throw DimensionError("FeatureSet::add: inconsistent dimension");
    }
    rows.insert(rows.end(), x.begin(), x.end());
  }
};

struct HnmResult {
  svm::LinearModel model;
  HnmReport report;
};

namespace detail_hnm {

inline svm::TrainSet assemble(const FeatureSet& positives,
                              const FeatureSet& negatives) {
  const auto [wp, wn] =
      svm::balance_weights(positives.size(), negatives.size());
  svm::TrainSet ts;
  ts.dim = positives.dim;
  const int n = positives.size() + negatives.size();
  ts.features.reserve(static_cast<std::size_t>(n) * ts.dim);
  ts.labels.reserve(n);
  ts.sample_weights.reserve(n);
  for (int i = 0; i < positives.size(); ++i) ts.add(positives.row(i), 1, wp);
  for (int i = 0; i < negatives.size(); ++i) ts.add(negatives.row(i), -1, wn);
  return ts;
}

inline int count_training_errors(const svm::LinearModel& model,
                                 const svm::TrainSet& ts) {
  int errors = 0;
  for (int i = 0; i < ts.size(); ++i) {
    const double s = svm::score(model, ts.row(i));
    const bool predicted_pos = s > 0.0;
    if (predicted_pos != (ts.labels[i] > 0)) ++errors;
  }
  return errors;
}

}  // namespace detail_hnm

// Hard-negative-mining training loop: train a class-balanced SVM on the
// current negative set, then mine every training frame for up to
// per_image_cap windows per image that are not already in the set
// (identity = frame id, level, position), append them, repeat. A round
// that finds no window outside the set is a fixed point: retraining would
// reproduce the same model, so the loop reports convergence there. The
// iteration cap handles sets the model cannot separate.
inline HnmResult train_with_hnm(const FeatureSet& positives,
                                const FeatureSet& seed_negatives,
                                const std::vector<MiningFrame>& frames,
                                const HnmConfig& cfg) {
  if (positives.size() == 0) {
    throw DegenerateDataError("train_with_hnm: no positive samples");
  }
  if (seed_negatives.size() == 0) {
    throw DegenerateDataError("train_with_hnm: no seed negatives");
  }
  if (positives.dim != seed_negatives.dim) {
    throw DimensionError("train_with_hnm: positive/negative dimension mismatch");
  }
  const int expected_dim =
      detector::window_feature_dim(cfg.detect.window, cfg.pyramid.shrink);
  if (positives.dim != expected_dim) {
    throw DimensionError("train_with_hnm: feature dimension does not match window");
  }

  FeatureSet negatives = seed_negatives;  // seeds are never dropped
  std::set<WindowKey> known;
  svm::DcdState solver_state;

  HnmResult result;
  result.report.converged = false;
  svm::TrainSet ts;
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    ts = detail_hnm::assemble(positives, negatives);
    auto trained = svm::train_detailed(ts, cfg.svm, &solver_state);
    result.model = std::move(trained.model);
    result.model.window = cfg.detect.window;
    result.model.shrink = cfg.pyramid.shrink;
    result.report.iterations_run = iter + 1;

    int new_count = 0;
    for (const auto& frame : frames) {
      int taken = 0;
      for (const auto& c : detail_hnm::qualifying_windows(result.model, frame, cfg)) {
        if (taken >= cfg.per_image_cap) break;
        const WindowKey key{frame.frame_id, c.level, c.row, c.col};
        if (!known.insert(key).second) continue;
        negatives.add(
            detail_hnm::to_mined(c, frame, cfg.detect.window).features);
        ++taken;
        ++new_count;
      }
    }
    result.report.new_negatives_per_iteration.push_back(new_count);
    if (new_count == 0) {
      result.report.converged = true;
      break;
    }
  }

  result.report.final_objective = svm::objective(result.model, ts, cfg.svm.C);
  result.report.final_training_errors =
      detail_hnm::count_training_errors(result.model, ts);
  return result;
}

}  // namespace placedet::mining
