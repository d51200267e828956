#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "placedet/detail/rng.hpp"
#include "placedet/svm.hpp"

using namespace placedet;
using svm::TrainSet;

namespace {

TrainSet make_set(const std::vector<std::vector<float>>& xs,
                  const std::vector<int>& ys,
                  const std::vector<double>& ws = {}) {
  TrainSet ts;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ts.add(xs[i], ys[i], ws.empty() ? 1.0 : ws[i]);
  }
  return ts;
}

svm::LinearModel make_model(std::vector<double> w, double b) {
  svm::LinearModel m;
  m.feature_dim = static_cast<int>(w.size());
  m.weights = std::move(w);
  m.bias = b;
  return m;
}

// Random tiny problem with both classes present.
TrainSet random_problem(detail::Rng& rng, int max_n = 8, int max_d = 2) {
  const int d = rng.uniform_int(1, max_d);
  const int n = rng.uniform_int(2, max_n);
  while (true) {
    TrainSet ts;
    bool pos = false, neg = false;
    for (int i = 0; i < n; ++i) {
      std::vector<float> x(d);
      for (auto& v : x) v = static_cast<float>(rng.uniform(-1.0, 1.0));
      const int y = rng.bernoulli(0.5) ? 1 : -1;
      (y > 0 ? pos : neg) = true;
      ts.add(x, y, rng.uniform(0.5, 2.0));
    }
    if (pos && neg) return ts;
  }
}

}  // namespace

TEST_CASE("objective of the zero model is C times the weighted count") {
  detail::Rng rng(1);
  TrainSet ts = random_problem(rng);
  double weight_sum = 0;
  for (double w : ts.sample_weights) weight_sum += w;
  const auto zero = make_model(std::vector<double>(ts.dim, 0.0), 0.0);
  REQUIRE(svm::objective(zero, ts, 100.0) ==
          Catch::Approx(100.0 * weight_sum).epsilon(1e-12));
}

TEST_CASE("objective on an empty sample set is the regularizer alone") {
  TrainSet empty;
  empty.dim = 2;
  const auto m = make_model({3.0, 4.0}, 0.0);
  REQUIRE(svm::objective(m, empty, 100.0) == Catch::Approx(12.5));
  // The bias participates in the regularizer (augmented-feature primal).
  const auto mb = make_model({3.0, 4.0}, 2.0);
  REQUIRE(svm::objective(mb, empty, 100.0) == Catch::Approx(14.5));
}

TEST_CASE("objective with both margins exactly one is 0.5") {
  TrainSet ts = make_set({{1.0f}, {-1.0f}}, {1, -1});
  const auto m = make_model({1.0}, 0.0);
  REQUIRE(svm::objective(m, ts, 100.0) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("balance weights satisfy both constraints") {
  auto [p1, n1] = svm::balance_weights(10, 10);
  REQUIRE(p1 == Catch::Approx(1.0));
  REQUIRE(n1 == Catch::Approx(1.0));
  auto [p2, n2] = svm::balance_weights(10, 90);
  REQUIRE(p2 == Catch::Approx(5.0));
  REQUIRE(n2 == Catch::Approx(5.0 / 9.0));
  auto [p3, n3] = svm::balance_weights(1, 1);
  REQUIRE(p3 == Catch::Approx(1.0));
  REQUIRE(n3 == Catch::Approx(1.0));
  REQUIRE_THROWS_AS(svm::balance_weights(0, 5), DegenerateDataError);
}

TEST_CASE("hard-margin pair trains to the analytic optimum") {
  TrainSet ts = make_set({{1.0f}, {-1.0f}}, {1, -1});
  svm::SvmConfig cfg;
  const auto m = svm::train(ts, cfg);
  REQUIRE(m.weights[0] == Catch::Approx(1.0).margin(1e-2));
  REQUIRE(m.bias == Catch::Approx(0.0).margin(1e-2));
  REQUIRE(svm::objective(m, ts, cfg.C) == Catch::Approx(0.5).margin(1e-2));
}

TEST_CASE("a weight-3 sample is equivalent to three unit copies") {
  detail::Rng rng(42);
  for (int t = 0; t < 5; ++t) {
    TrainSet weighted, repeated;
    const int n = rng.uniform_int(2, 5);
    bool pos = false, neg = false;
    for (int i = 0; i < n; ++i) {
      std::vector<float> x = {static_cast<float>(rng.uniform(-1, 1)),
                              static_cast<float>(rng.uniform(-1, 1))};
      const int y = i == 0 ? 1 : (i == 1 ? -1 : (rng.bernoulli(0.5) ? 1 : -1));
      (y > 0 ? pos : neg) = true;
      if (i == 0) {
        weighted.add(x, y, 3.0);
        repeated.add(x, y, 1.0);
        repeated.add(x, y, 1.0);
        repeated.add(x, y, 1.0);
      } else {
        weighted.add(x, y, 1.0);
        repeated.add(x, y, 1.0);
      }
    }
    REQUIRE((pos && neg));
    svm::SvmConfig cfg;
    cfg.tolerance = 1e-6;
    const auto mw = svm::train(weighted, cfg);
    const auto mr = svm::train(repeated, cfg);
    // Evaluate both objectives on the weighted formulation.
    REQUIRE(svm::objective(mw, weighted, cfg.C) ==
            Catch::Approx(svm::objective(mr, weighted, cfg.C)).margin(1e-3));
  }
}

TEST_CASE("XOR arrangement is inseparable but reaches the convex optimum") {
  TrainSet ts = make_set({{1.0f, 1.0f}, {-1.0f, -1.0f}, {1.0f, -1.0f}, {-1.0f, 1.0f}},
                         {1, 1, -1, -1});
  svm::SvmConfig cfg;
  const auto res = svm::train_detailed(ts, cfg);
  int errors = 0;
  for (int i = 0; i < ts.size(); ++i) {
    const double s = svm::score(res.model, ts.row(i));
    if ((s > 0) != (ts.labels[i] > 0)) ++errors;
  }
  REQUIRE(errors >= 1);

  // Dense grid over (w1, w2, b) in [-3, 3]^3, step 0.01.
  const auto grid = oracles::grid_search(ts, cfg.C, {-3, -3, -3}, {3, 3, 3}, 0.01);
  const double trained = svm::objective(res.model, ts, cfg.C);
  REQUIRE(trained <= grid.objective + 1e-2);
  REQUIRE(grid.objective <= trained + 0.05);
}

TEST_CASE("trained objective matches the grid oracle on random problems") {
  detail::Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    TrainSet ts = random_problem(rng);
    svm::SvmConfig cfg;
    cfg.tolerance = 1e-8;
    cfg.max_epochs = 200000;
    const auto m = svm::train(ts, cfg);
    const double trained = svm::objective(m, ts, cfg.C);
    const double oracle = oracles::grid_search_refined(ts, cfg.C);
    REQUIRE(trained <= oracle + 1e-2);
  }
}

TEST_CASE("solver epoch objective never increases") {
  detail::Rng rng(19);
  for (int t = 0; t < 10; ++t) {
    TrainSet ts = random_problem(rng);
    const auto res = svm::train_detailed(ts, {});
    const auto& trace = res.info.epoch_dual_objective;
    REQUIRE(!trace.empty());
    for (std::size_t k = 1; k < trace.size(); ++k) {
      REQUIRE(trace[k] <= trace[k - 1] + 1e-9);
    }
  }
}

TEST_CASE("negating all labels negates the model") {
  detail::Rng rng(23);
  TrainSet ts = random_problem(rng, 8, 2);
  TrainSet flipped = ts;
  for (auto& y : flipped.labels) y = -y;
  const auto a = svm::train(ts, {});
  const auto b = svm::train(flipped, {});
  for (int j = 0; j < ts.dim; ++j) {
    REQUIRE(b.weights[j] == Catch::Approx(-a.weights[j]).margin(1e-6));
  }
  REQUIRE(b.bias == Catch::Approx(-a.bias).margin(1e-6));
}

TEST_CASE("separable data trains to zero errors at C=100") {
  detail::Rng rng(31);
  for (int t = 0; t < 10; ++t) {
    // Plant a separating direction and push classes margin 0.1 apart.
    const double angle = rng.uniform(0, 6.28);
    const double ux = std::cos(angle), uy = std::sin(angle);
    TrainSet ts;
    for (int i = 0; i < 8; ++i) {
      const int y = i % 2 == 0 ? 1 : -1;
      const double along = y * (0.05 + rng.uniform(0.0, 0.8));
      const double across = rng.uniform(-1.0, 1.0);
      std::vector<float> x = {static_cast<float>(along * ux - across * uy),
                              static_cast<float>(along * uy + across * ux)};
      ts.add(x, y);
    }
    const auto m = svm::train(ts, {});
    for (int i = 0; i < ts.size(); ++i) {
      const double s = svm::score(m, ts.row(i));
      REQUIRE((s > 0) == (ts.labels[i] > 0));
    }
  }
}

TEST_CASE("degenerate and invalid training sets are rejected") {
  TrainSet single = make_set({{1.0f}, {2.0f}}, {1, 1});
  REQUIRE_THROWS_AS(svm::train(single, {}), DegenerateDataError);
  REQUIRE_THROWS_AS(svm::train(TrainSet{}, {}), DegenerateDataError);
  TrainSet bad = make_set({{1.0f}, {std::nanf("")}}, {1, -1});
  REQUIRE_THROWS_AS(svm::train(bad, {}), InvalidInputError);
}

TEST_CASE("warm start reproduces the cold-start optimum") {
  detail::Rng rng(57);
  TrainSet ts = random_problem(rng, 8, 2);
  svm::SvmConfig cfg;
  cfg.tolerance = 1e-8;
  svm::DcdState state;
  const auto first = svm::train_detailed(ts, cfg, &state);
  // Append two more samples and retrain warm vs cold.
  ts.add(std::vector<float>(ts.dim, 0.3f), 1, 1.0);
  ts.add(std::vector<float>(ts.dim, -0.4f), -1, 1.0);
  const auto warm = svm::train_detailed(ts, cfg, &state);
  const auto cold = svm::train_detailed(ts, cfg);
  REQUIRE(svm::objective(warm.model, ts, cfg.C) ==
          Catch::Approx(svm::objective(cold.model, ts, cfg.C)).margin(1e-4));
  REQUIRE(first.info.converged);
  REQUIRE(warm.info.converged);
}
