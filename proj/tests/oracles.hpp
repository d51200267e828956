// Independent reference implementations used only by tests. These stay
// deliberately brute-force and share no code with the library paths they
// check.
#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "placedet/eval.hpp"
#include "placedet/svm.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// Detection metrics via explicit threshold enumeration.

struct Outcome {
  double score;
  bool tp;
};

// Precision/recall by counting at an explicit threshold (score >= t).
inline void counts_at_threshold(const std::vector<Outcome>& v, double t,
                                int& tp, int& fp) {
  tp = 0;
  fp = 0;
  for (const auto& o : v) {
    if (o.score >= t) {
      if (o.tp) {
        ++tp;
      } else {
        ++fp;
      }
    }
  }
}

// All-point interpolated AP computed from scratch: enumerate thresholds at
// every distinct score, build the (recall, precision) set, integrate the
// envelope over recall.
inline double ap(const std::vector<Outcome>& outcomes, int n_gt) {
  std::vector<double> thresholds;
  for (const auto& o : outcomes) thresholds.push_back(o.score);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  struct Pt {
    double r, p;
  };
  std::vector<Pt> pts;
  for (double t : thresholds) {
    int tp, fp;
    counts_at_threshold(outcomes, t, tp, fp);
    pts.push_back({static_cast<double>(tp) / n_gt,
                   tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp)});
  }
  double area = 0.0;
  double prev_r = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (pts[k].r <= prev_r) continue;
    double best = 0.0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (pts[j].r >= pts[k].r) best = std::max(best, pts[j].p);
    }
    area += (pts[k].r - prev_r) * best;
    prev_r = pts[k].r;
  }
  return area;
}

inline double max_f1(const std::vector<Outcome>& outcomes, int n_gt) {
  std::vector<double> thresholds;
  for (const auto& o : outcomes) thresholds.push_back(o.score);
  double best = 0.0;
  for (double t : thresholds) {
    int tp, fp;
    counts_at_threshold(outcomes, t, tp, fp);
    const double r = static_cast<double>(tp) / n_gt;
    const double p = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
    if (p + r > 0) best = std::max(best, 2 * p * r / (p + r));
  }
  return best;
}

inline double lamr(const std::vector<Outcome>& outcomes, int n_gt, int n_images) {
  std::vector<double> thresholds;
  for (const auto& o : outcomes) thresholds.push_back(o.score);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  double log_sum = 0.0;
  for (int s = 0; s < 9; ++s) {
    const double sample = std::pow(10.0, -2.0 + 2.0 * s / 8.0);
    // Best operating point with fppi <= sample over every threshold.
    double mr = 1.0;
    double best_fppi = -1.0;
    for (double t : thresholds) {
      int tp, fp;
      counts_at_threshold(outcomes, t, tp, fp);
      const double fppi = static_cast<double>(fp) / n_images;
      if (fppi <= sample && fppi > best_fppi) {
        best_fppi = fppi;
        mr = 1.0 - static_cast<double>(tp) / n_gt;
      } else if (fppi <= sample && fppi == best_fppi) {
        mr = std::min(mr, 1.0 - static_cast<double>(tp) / n_gt);
      }
    }
    log_sum += std::log(std::max(mr, 1e-4));
  }
  return std::exp(log_sum / 9.0);
}

// ---------------------------------------------------------------------------
// SVM objective minimum by dense grid search over (w, b), d <= 2.

inline double grid_objective(const placedet::svm::TrainSet& ts, double C,
                             const std::vector<double>& w, double b) {
  double reg = b * b;
  for (double v : w) reg += v * v;
  double loss = 0.0;
  for (int i = 0; i < ts.size(); ++i) {
    const auto x = ts.row(i);
    double m = b;
    for (std::size_t j = 0; j < x.size(); ++j) m += w[j] * x[j];
    loss += ts.sample_weights[i] * std::max(0.0, 1.0 - ts.labels[i] * m);
  }
  return 0.5 * reg + C * loss;
}

struct GridResult {
  double objective;
  std::vector<double> w;
  double b;
};

inline GridResult grid_search(const placedet::svm::TrainSet& ts, double C,
                              std::vector<double> lo, std::vector<double> hi,
                              double step) {
  const int d = ts.dim;
  GridResult best{std::numeric_limits<double>::infinity(),
                  std::vector<double>(d, 0.0), 0.0};
  std::vector<double> w(d, 0.0);
  const auto steps_of = [&](int axis) {
    return static_cast<int>(std::floor((hi[axis] - lo[axis]) / step + 0.5)) + 1;
  };
  if (d == 1) {
    for (int i0 = 0; i0 < steps_of(0); ++i0) {
      w[0] = lo[0] + i0 * step;
      for (int ib = 0; ib < steps_of(1); ++ib) {
        const double b = lo[1] + ib * step;
        const double obj = grid_objective(ts, C, w, b);
        if (obj < best.objective) best = {obj, w, b};
      }
    }
  } else {
    for (int i0 = 0; i0 < steps_of(0); ++i0) {
      w[0] = lo[0] + i0 * step;
      for (int i1 = 0; i1 < steps_of(1); ++i1) {
        w[1] = lo[1] + i1 * step;
        for (int ib = 0; ib < steps_of(2); ++ib) {
          const double b = lo[2] + ib * step;
          const double obj = grid_objective(ts, C, w, b);
          if (obj < best.objective) best = {obj, w, b};
        }
      }
    }
  }
  return best;
}

// Coarse global pass then two local refinements around the best cell.
inline double grid_search_refined(const placedet::svm::TrainSet& ts, double C,
                                  double range = 3.0) {
  const int d = ts.dim;
  std::vector<double> lo(d + 1, -range), hi(d + 1, range);
  GridResult best = grid_search(ts, C, lo, hi, 0.05);
  double step = 0.05;
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<double> center = best.w;
    center.push_back(best.b);
    for (int a = 0; a <= d; ++a) {
      lo[a] = center[a] - 1.2 * step;
      hi[a] = center[a] + 1.2 * step;
    }
    step /= 10.0;
    const GridResult refined = grid_search(ts, C, lo, hi, step);
    if (refined.objective < best.objective) best = refined;
  }
  return best.objective;
}

}  // namespace oracles
