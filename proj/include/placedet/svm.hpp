#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "placedet/errors.hpp"
#include "placedet/image.hpp"

namespace placedet::svm {

// Linear window classifier. `window` is informational for bare vector
// models (tests, toy problems) and is validated against feature_dim only
// when the model is used by the sliding-window detector.
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  int feature_dim = 0;
  WindowSize window{0, 0};
  int shrink = 4;
};

inline double score(const LinearModel& m, std::span<const float> x) {
  if (static_cast<int>(x.size()) != m.feature_dim) {
    throw DimensionError("svm::score: feature dimension mismatch");
  }
  double s = m.bias;
  const double* w = m.weights.data();
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
  return s;
}

// Row-major sample matrix with labels in {-1, +1} and positive
// per-sample weights.
struct TrainSet {
  int dim = 0;
  std::vector<float> features;
  std::vector<int> labels;
  std::vector<double> sample_weights;

  int size() const { return static_cast<int>(labels.size()); }

  std::span<const float> row(int i) const {
    return {features.data() + static_cast<std::size_t>(i) * dim,
            static_cast<std::size_t>(dim)};
  }

  void add(std::span<const float> x, int label, double weight = 1.0) {
    if (dim == 0) dim = static_cast<int>(x.size());
    if (static_cast<int>(x.size()) != dim) {
      throw DimensionError("TrainSet::add: inconsistent feature dimension");
    }
    if (label != 1 && label != -1) {
      throw InvalidInputError("TrainSet::add: label must be +1 or -1");
    }
    if (!(weight > 0.0)) {
      throw InvalidInputError("TrainSet::add: sample weight must be > 0");
    }
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
    sample_weights.push_back(weight);
  }
};

struct SvmConfig {
  double C = 100.0;
  double tolerance = 1e-4;  // relative duality gap at which training stops
  int max_epochs = 1000;
};

// Per-training diagnostics. epoch_dual_objective holds the solver's own
// objective (the dual, in minimization form) after each full sweep; exact
// coordinate minimization makes this sequence non-increasing.
struct TrainInfo {
  int epochs = 0;
  bool converged = false;
  double primal_objective = 0.0;  // includes the 0.5*bias^2 term
  double duality_gap = 0.0;
  std::vector<double> epoch_dual_objective;
};

struct TrainResult {
  LinearModel model;
  TrainInfo info;
};

// 0.5*(||w||^2 + b^2) + C * sum_i c_i * max(0, 1 - y_i*(w.x_i + b)).
// The bias enters the regularizer because it is an augmented constant
// feature with unit value (the LibLinear-style primal); train() minimizes
// exactly this function, which is what makes the optimality bound below
// checkable against a grid oracle.
inline double objective(const LinearModel& m, const TrainSet& ts, double C) {
  if (ts.size() > 0 && ts.dim != m.feature_dim) {
    throw DimensionError("svm::objective: dimension mismatch");
  }
  double reg = m.bias * m.bias;
  for (double w : m.weights) reg += w * w;
  double loss = 0.0;
  for (int i = 0; i < ts.size(); ++i) {
    const double margin = ts.labels[i] * score(m, ts.row(i));
    loss += ts.sample_weights[i] * std::max(0.0, 1.0 - margin);
  }
  return 0.5 * reg + C * loss;
}

// Class-balancing sample weights: pos*n_pos == neg*n_neg, normalized so
// the total weighted count equals n_pos + n_neg.
inline std::pair<double, double> balance_weights(int n_pos, int n_neg) {
  if (n_pos < 1 || n_neg < 1) {
    throw DegenerateDataError("balance_weights: both classes must be non-empty");
  }
  const double total = static_cast<double>(n_pos) + n_neg;
  return {total / (2.0 * n_pos), total / (2.0 * n_neg)};
}

// Warm-start state for repeated retraining on a growing sample set (hard
// negative mining). Alphas are keyed by sample index; new samples start
// at zero.
struct DcdState {
  std::vector<double> alpha;
};

// Dual coordinate descent for the weighted L1-hinge primal
//
//   min_{w,b} 0.5*(||w||^2 + b^2) + C * sum_i c_i * hinge_i
//
// with the bias handled as an augmented constant feature of value 1.
// Deterministic cyclic sweeps, no shuffling. Stops when the duality gap
// drops below tolerance * max(1, primal).
//
// Plain cyclic steps stall on (near-)duplicate samples with opposite
// labels: increasing both alphas moves the dual along a direction of
// (near-)zero curvature that single-coordinate steps can only crawl
// along. After each sweep one joint step on the most violating
// opposite-label pair resolves that ray analytically.
inline TrainResult train_detailed(const TrainSet& ts, const SvmConfig& cfg,
                                  DcdState* state = nullptr) {
  const int n = ts.size();
  if (n == 0) throw DegenerateDataError("svm::train: empty training set");
  bool has_pos = false, has_neg = false;
  for (int y : ts.labels) (y > 0 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) {
    throw DegenerateDataError("svm::train: training set contains a single class");
  }
  for (float v : ts.features) {
    if (!std::isfinite(v)) {
      throw InvalidInputError("svm::train: non-finite feature value");
    }
  }
  if (!(cfg.C > 0.0)) throw InvalidInputError("svm::train: C must be > 0");

  const int d = ts.dim;
  std::vector<double> alpha(n, 0.0);
  if (state != nullptr && !state->alpha.empty()) {
    const std::size_t keep = std::min(state->alpha.size(), alpha.size());
    for (std::size_t i = 0; i < keep; ++i) {
      alpha[i] = std::max(0.0, state->alpha[i]);
    }
  }

  std::vector<double> qii(n);
  std::vector<double> upper(n);
  for (int i = 0; i < n; ++i) {
    const auto x = ts.row(i);
    double s = 1.0;  // bias feature
    for (float v : x) s += static_cast<double>(v) * v;
    qii[i] = s;
    upper[i] = cfg.C * ts.sample_weights[i];
    if (alpha[i] > upper[i]) alpha[i] = upper[i];
  }

  std::vector<double> w(d, 0.0);
  double b = 0.0;
  for (int i = 0; i < n; ++i) {
    if (alpha[i] == 0.0) continue;
    const double coef = alpha[i] * ts.labels[i];
    const auto x = ts.row(i);
    for (int j = 0; j < d; ++j) w[j] += coef * x[j];
    b += coef;
  }

  TrainInfo info;
  double primal = 0.0, gap = 0.0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    for (int i = 0; i < n; ++i) {
      const auto x = ts.row(i);
      const int y = ts.labels[i];
      double wx = b;
      for (int j = 0; j < d; ++j) wx += w[j] * x[j];
      const double g = y * wx - 1.0;
      const double a_old = alpha[i];
      double a_new = a_old - g / qii[i];
      if (a_new < 0.0) a_new = 0.0;
      if (a_new > upper[i]) a_new = upper[i];
      const double delta = a_new - a_old;
      if (delta != 0.0) {
        alpha[i] = a_new;
        const double coef = delta * y;
        for (int j = 0; j < d; ++j) w[j] += coef * x[j];
        b += coef * 1.0;
      }
    }

    // Joint pair steps along (e_i, e_j) for one positive and one negative
    // sample. y_i*x_i + y_j*x_j nearly cancels for opposed duplicates, so
    // the alphas can move together freely where single-coordinate steps
    // would crawl against the full curvature.
    std::vector<double> grad(n);
    for (int i = 0; i < n; ++i) {
      const auto x = ts.row(i);
      double wx = b;
      for (int j = 0; j < d; ++j) wx += w[j] * x[j];
      grad[i] = ts.labels[i] * wx - 1.0;
    }
    const auto apply_ray = [&](int i, int j, double dir) {
      // dir = +1 raises both alphas, -1 lowers both.
      const auto xi = ts.row(i);
      const auto xj = ts.row(j);
      double dot_ij = 1.0;  // bias feature product
      for (int k = 0; k < d; ++k) {
        dot_ij += static_cast<double>(xi[k]) * xj[k];
      }
      // Curvature along (e_i + e_j): Qii + Qjj + 2*yi*yj*Kij, with
      // opposite labels making the cross term negative.
      const double curv = qii[i] + qii[j] - 2.0 * dot_ij;
      const double slope = dir * (grad[i] + grad[j]);
      if (slope >= 0.0) return;
      const double t_max =
          dir > 0 ? std::min(upper[i] - alpha[i], upper[j] - alpha[j])
                  : std::min(alpha[i], alpha[j]);
      double t = curv > 1e-12 ? std::min(-slope / curv, t_max) : t_max;
      if (t <= 0.0) return;
      alpha[i] += dir * t;
      alpha[j] += dir * t;
      const double step = dir * t;
      for (int k = 0; k < d; ++k) {
        w[k] += step * (static_cast<double>(xi[k]) - xj[k]);
      }
      // Bias feature: y_i + y_j = 0, so b is unchanged.
    };
    int up_pos = -1, up_neg = -1, down_pos = -1, down_neg = -1;
    for (int i = 0; i < n; ++i) {
      if (ts.labels[i] > 0) {
        if (alpha[i] < upper[i] && (up_pos < 0 || grad[i] < grad[up_pos])) up_pos = i;
        if (alpha[i] > 0.0 && (down_pos < 0 || grad[i] > grad[down_pos])) down_pos = i;
      } else {
        if (alpha[i] < upper[i] && (up_neg < 0 || grad[i] < grad[up_neg])) up_neg = i;
        if (alpha[i] > 0.0 && (down_neg < 0 || grad[i] > grad[down_neg])) down_neg = i;
      }
    }
    if (up_pos >= 0 && up_neg >= 0) apply_ray(up_pos, up_neg, +1.0);
    if (down_pos >= 0 && down_neg >= 0) apply_ray(down_pos, down_neg, -1.0);

    // Gap bookkeeping once per sweep.
    double wnorm2 = b * b;
    for (double v : w) wnorm2 += v * v;
    double alpha_sum = 0.0;
    for (double a : alpha) alpha_sum += a;
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto x = ts.row(i);
      double wx = b;
      for (int j = 0; j < d; ++j) wx += w[j] * x[j];
      const double margin = ts.labels[i] * wx;
      loss += ts.sample_weights[i] * std::max(0.0, 1.0 - margin);
    }
    primal = 0.5 * wnorm2 + cfg.C * loss;
    const double dual_min_form = 0.5 * wnorm2 - alpha_sum;
    info.epoch_dual_objective.push_back(dual_min_form);
    gap = primal + dual_min_form;  // primal - (-dual_min_form)
    info.epochs = epoch + 1;
    if (gap <= cfg.tolerance * std::max(1.0, std::abs(primal))) {
      info.converged = true;
      break;
    }
  }
  info.primal_objective = primal;
  info.duality_gap = gap;

  if (state != nullptr) state->alpha = alpha;

  TrainResult out;
  out.model.weights = std::move(w);
  out.model.bias = b;
  out.model.feature_dim = d;
  out.info = std::move(info);
  return out;
}

inline LinearModel train(const TrainSet& ts, const SvmConfig& cfg = {}) {
  return train_detailed(ts, cfg).model;
}

}  // namespace placedet::svm
