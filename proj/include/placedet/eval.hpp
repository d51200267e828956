#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "placedet/box.hpp"
#include "placedet/detector.hpp"
#include "placedet/errors.hpp"

namespace placedet::eval {

using placedet::iou;

// Pascal-style greedy matching for one image, detections processed in
// descending score order (ties by input order). A detection claims the
// unmatched ground-truth box of highest IoU when that IoU clears iou_min.
struct MatchResult {
  std::vector<std::size_t> order;   // detection indices, score-descending
  std::vector<char> is_tp;          // parallel to `order`
  std::vector<char> gt_matched;     // parallel to ground truth input
};

inline MatchResult match_detections(const std::vector<detector::Detection>& dets,
                                    const std::vector<BoundingBox>& gt,
                                    double iou_min = 0.5) {
  MatchResult res;
  res.order.resize(dets.size());
  std::iota(res.order.begin(), res.order.end(), 0);
  std::stable_sort(res.order.begin(), res.order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return dets[a].score > dets[b].score;
                   });
  res.is_tp.assign(dets.size(), 0);
  res.gt_matched.assign(gt.size(), 0);
  for (std::size_t k = 0; k < res.order.size(); ++k) {
    const auto& det = dets[res.order[k]];
    double best_iou = 0.0;
    std::size_t best_gt = gt.size();
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (res.gt_matched[g]) continue;
      const double v = iou(det.box, gt[g]);
      if (v > best_iou) {
        best_iou = v;
        best_gt = g;
      }
    }
    if (best_gt < gt.size() && best_iou >= iou_min) {
      res.is_tp[k] = 1;
      res.gt_matched[best_gt] = 1;
    }
  }
  return res;
}

// One dataset-wide detection outcome: score plus its TP/FP flag from
// per-image matching.
struct ScoredFlag {
  double score = 0.0;
  bool tp = false;
};

inline void sort_by_score_desc(std::vector<ScoredFlag>& flags) {
  std::stable_sort(flags.begin(), flags.end(),
                   [](const ScoredFlag& a, const ScoredFlag& b) {
                     return a.score > b.score;
                   });
}

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct MrFppiPoint {
  double fppi = 0.0;
  double miss_rate = 1.0;
};

// All-point interpolated AP: area under the precision envelope of the
// rank sweep. `flags` must be sorted by descending score.
inline std::pair<double, std::vector<PrPoint>> average_precision(
    const std::vector<ScoredFlag>& flags, int n_ground_truth) {
  if (n_ground_truth < 1) {
    throw DegenerateDataError("average_precision: zero ground truth");
  }
  std::vector<PrPoint> points;
  points.reserve(flags.size());
  int tp = 0;
  for (std::size_t k = 0; k < flags.size(); ++k) {
    if (flags[k].tp) ++tp;
    PrPoint p;
    p.recall = static_cast<double>(tp) / n_ground_truth;
    p.precision = static_cast<double>(tp) / static_cast<double>(k + 1);
    points.push_back(p);
  }
  // Envelope: best precision at any recall >= r, scanned from the back.
  double ap = 0.0;
  double best_prec = 0.0;
  std::vector<double> env(points.size());
  for (std::size_t k = points.size(); k-- > 0;) {
    best_prec = std::max(best_prec, points[k].precision);
    env[k] = best_prec;
  }
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (points[k].recall > prev_recall) {
      ap += (points[k].recall - prev_recall) * env[k];
      prev_recall = points[k].recall;
    }
  }
  return {ap, std::move(points)};
}

inline constexpr int kLamrSamples = 9;
inline constexpr double kLamrFppiMin = 1e-2;
inline constexpr double kLamrFppiMax = 1.0;
inline constexpr double kMissRateClamp = 1e-4;

// Log-average miss rate: operating points from the rank sweep (one point
// per distinct FPPI, the best miss rate reached at it), sampled at 9
// log-uniform FPPI values in [1e-2, 1]. Samples below the first operating
// point use miss rate 1. Miss rates clamp to >= 1e-4 before the log mean.
inline std::pair<double, std::vector<MrFppiPoint>> log_average_miss_rate(
    const std::vector<ScoredFlag>& flags, int n_ground_truth, int n_images) {
  if (n_ground_truth < 1) {
    throw DegenerateDataError("log_average_miss_rate: zero ground truth");
  }
  if (n_images < 1) {
    throw DegenerateDataError("log_average_miss_rate: zero images");
  }

  // One operating point per distinct FPPI; later ranks at the same FPPI
  // only add true positives, so they overwrite with a lower miss rate.
  std::vector<MrFppiPoint> points;
  int tp = 0, fp = 0;
  for (const auto& flag : flags) {
    if (flag.tp) {
      ++tp;
    } else {
      ++fp;
    }
    const double fppi = static_cast<double>(fp) / n_images;
    const double mr = 1.0 - static_cast<double>(tp) / n_ground_truth;
    if (!points.empty() && points.back().fppi == fppi) {
      points.back().miss_rate = mr;
    } else {
      points.push_back({fppi, mr});
    }
  }

  double log_sum = 0.0;
  for (int s = 0; s < kLamrSamples; ++s) {
    const double sample =
        kLamrFppiMin * std::pow(kLamrFppiMax / kLamrFppiMin,
                                static_cast<double>(s) / (kLamrSamples - 1));
    double mr = 1.0;
    bool found = false;
    for (const auto& p : points) {
      if (p.fppi <= sample) {
        mr = p.miss_rate;  // points are FPPI-ascending; keep the last one
        found = true;
      } else {
        break;
      }
    }
    if (!found) mr = 1.0;
    log_sum += std::log(std::max(mr, kMissRateClamp));
  }
  const double lamr = std::exp(log_sum / kLamrSamples);
  return {lamr, std::move(points)};
}

inline double max_f1(const std::vector<PrPoint>& pr_points) {
  double best = 0.0;
  for (const auto& p : pr_points) {
    const double denom = p.precision + p.recall;
    if (denom > 0.0) {
      best = std::max(best, 2.0 * p.precision * p.recall / denom);
    }
  }
  return best;
}

struct EvalCounts {
  int n_detections = 0;
  int n_ground_truth = 0;
  int n_images = 0;
};

struct EvalResult {
  std::vector<PrPoint> pr_points;
  std::vector<MrFppiPoint> mr_fppi_points;
  double ap = 0.0;
  double lamr = 1.0;
  double max_f1 = 0.0;
  EvalCounts counts;
};

struct FrameGroundTruth {
  std::vector<detector::Detection> detections;
  std::vector<BoundingBox> ground_truth;
};

// Full-dataset evaluation: per-image matching, then the three aggregate
// metrics over the merged score-sorted list.
inline EvalResult evaluate(const std::vector<FrameGroundTruth>& frames,
                           double iou_min = 0.5) {
  EvalResult result;
  result.counts.n_images = static_cast<int>(frames.size());
  std::vector<ScoredFlag> flags;
  for (const auto& f : frames) {
    result.counts.n_detections += static_cast<int>(f.detections.size());
    result.counts.n_ground_truth += static_cast<int>(f.ground_truth.size());
    const MatchResult m = match_detections(f.detections, f.ground_truth, iou_min);
    for (std::size_t k = 0; k < m.order.size(); ++k) {
      flags.push_back({f.detections[m.order[k]].score, m.is_tp[k] != 0});
    }
  }
  sort_by_score_desc(flags);
  if (result.counts.n_ground_truth < 1) {
    throw DegenerateDataError("evaluate: dataset has zero ground-truth boxes");
  }
  auto [ap, pr] = average_precision(flags, result.counts.n_ground_truth);
  result.ap = ap;
  result.pr_points = std::move(pr);
  auto [lamr, mrfppi] = log_average_miss_rate(flags, result.counts.n_ground_truth,
                                              result.counts.n_images);
  result.lamr = lamr;
  result.mr_fppi_points = std::move(mrfppi);
  result.max_f1 = max_f1(result.pr_points);
  return result;
}

}  // namespace placedet::eval
