#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "placedet/detail/rng.hpp"
#include "placedet/eval.hpp"

using namespace placedet;
using detector::Detection;
using eval::ScoredFlag;

namespace {

Detection det(double x, double y, double w, double h, double score) {
  Detection d;
  d.box = {x, y, w, h};
  d.score = score;
  return d;
}

std::vector<oracles::Outcome> to_outcomes(const std::vector<ScoredFlag>& flags) {
  std::vector<oracles::Outcome> out;
  for (const auto& f : flags) out.push_back({f.score, f.tp});
  return out;
}

// Random matched instance: boxes on a small canvas, continuous scores.
std::vector<ScoredFlag> random_instance(placedet::detail::Rng& rng, int& n_gt_out) {
  const int n_gt = rng.uniform_int(1, 5);
  const int n_det = rng.uniform_int(0, 10);
  std::vector<BoundingBox> gt;
  for (int i = 0; i < n_gt; ++i) {
    gt.push_back({rng.uniform(0, 60), rng.uniform(0, 60), rng.uniform(8, 25),
                  rng.uniform(8, 25)});
  }
  std::vector<Detection> dets;
  for (int i = 0; i < n_det; ++i) {
    if (rng.bernoulli(0.5) && n_gt > 0) {
      // Perturbed copy of some ground-truth box.
      const auto& g = gt[rng.uniform_int(0, n_gt - 1)];
      dets.push_back(det(g.x + rng.uniform(-4, 4), g.y + rng.uniform(-4, 4),
                         g.w * rng.uniform(0.8, 1.2), g.h * rng.uniform(0.8, 1.2),
                         rng.uniform(0.0, 1.0)));
    } else {
      dets.push_back(det(rng.uniform(0, 60), rng.uniform(0, 60),
                         rng.uniform(8, 25), rng.uniform(8, 25),
                         rng.uniform(0.0, 1.0)));
    }
  }
  const auto m = eval::match_detections(dets, gt, 0.5);
  std::vector<ScoredFlag> flags;
  for (std::size_t k = 0; k < m.order.size(); ++k) {
    flags.push_back({dets[m.order[k]].score, m.is_tp[k] != 0});
  }
  eval::sort_by_score_desc(flags);
  n_gt_out = n_gt;
  return flags;
}

}  // namespace

TEST_CASE("iou basics") {
  const BoundingBox a{0, 0, 10, 10};
  REQUIRE(eval::iou(a, a) == 1.0);
  REQUIRE(eval::iou(a, {20, 20, 5, 5}) == 0.0);
  // Half-offset equal squares: overlap 50, union 150.
  REQUIRE(eval::iou(a, {5, 0, 10, 10}) == Catch::Approx(1.0 / 3.0).margin(1e-12));
}

TEST_CASE("matching claims each ground truth once") {
  const std::vector<BoundingBox> gt = {{0, 0, 10, 10}};
  SECTION("single exact detection") {
    const auto m = eval::match_detections({det(0, 0, 10, 10, 1.0)}, gt);
    REQUIRE(m.is_tp == std::vector<char>{1});
    REQUIRE(m.gt_matched == std::vector<char>{1});
  }
  SECTION("double detection: high score claims, low score is FP") {
    const auto m = eval::match_detections(
        {det(0, 0, 10, 10, 1.0), det(0.5, 0, 10, 10, 2.0)}, gt);
    // Order is score-descending: first entry is the score-2 detection.
    REQUIRE(m.is_tp == std::vector<char>{1, 0});
  }
  SECTION("no detections leaves all ground truth missed") {
    const auto m = eval::match_detections({}, {{0, 0, 5, 5}, {10, 10, 5, 5}, {20, 20, 5, 5}});
    REQUIRE(m.gt_matched == std::vector<char>{0, 0, 0});
  }
}

TEST_CASE("average precision on hand-traced rankings") {
  SECTION("perfect detector") {
    std::vector<ScoredFlag> flags = {{3, true}, {2, true}};
    auto [ap, pr] = eval::average_precision(flags, 2);
    REQUIRE(ap == 1.0);
  }
  SECTION("one of two found") {
    std::vector<ScoredFlag> flags = {{1, true}};
    auto [ap, pr] = eval::average_precision(flags, 2);
    REQUIRE(ap == 0.5);
  }
  SECTION("TP, FP, TP gives 5/6") {
    std::vector<ScoredFlag> flags = {{3, true}, {2, false}, {1, true}};
    auto [ap, pr] = eval::average_precision(flags, 2);
    REQUIRE(ap == Catch::Approx(5.0 / 6.0).margin(1e-15));
  }
  REQUIRE_THROWS_AS(eval::average_precision({}, 0), DegenerateDataError);
}

TEST_CASE("log-average miss rate edge behaviour") {
  SECTION("perfect detector clamps to 1e-4") {
    std::vector<ScoredFlag> flags = {{3, true}, {2, true}};
    auto [lamr, pts] = eval::log_average_miss_rate(flags, 2, 10);
    REQUIRE(lamr == Catch::Approx(1e-4).epsilon(1e-12));
  }
  SECTION("empty detector gives 1.0") {
    auto [lamr, pts] = eval::log_average_miss_rate({}, 3, 10);
    REQUIRE(lamr == 1.0);
  }
}

TEST_CASE("max F1 on known curves") {
  REQUIRE(eval::max_f1({{1.0, 1.0}}) == 1.0);
  REQUIRE(eval::max_f1({{0.5, 1.0}}) == Catch::Approx(2.0 / 3.0));
  REQUIRE(eval::max_f1({{0.0, 0.0}}) == 0.0);
}

TEST_CASE("metrics equal the threshold-enumeration oracle") {
  placedet::detail::Rng rng(101);
  for (int t = 0; t < 60; ++t) {
    int n_gt = 0;
    const auto flags = random_instance(rng, n_gt);
    const auto outcomes = to_outcomes(flags);
    const int n_images = rng.uniform_int(1, 4);

    auto [ap, pr] = eval::average_precision(flags, n_gt);
    REQUIRE(ap == Catch::Approx(oracles::ap(outcomes, n_gt)).margin(1e-12));

    auto [lamr, pts] = eval::log_average_miss_rate(flags, n_gt, n_images);
    REQUIRE(lamr ==
            Catch::Approx(oracles::lamr(outcomes, n_gt, n_images)).margin(1e-12));

    REQUIRE(eval::max_f1(pr) ==
            Catch::Approx(oracles::max_f1(outcomes, n_gt)).margin(1e-12));
  }
}

TEST_CASE("sweep curves are monotone") {
  placedet::detail::Rng rng(202);
  for (int t = 0; t < 30; ++t) {
    int n_gt = 0;
    const auto flags = random_instance(rng, n_gt);
    auto [ap, pr] = eval::average_precision(flags, n_gt);
    for (std::size_t k = 1; k < pr.size(); ++k) {
      REQUIRE(pr[k].recall >= pr[k - 1].recall);
    }
    auto [lamr, pts] = eval::log_average_miss_rate(flags, n_gt, 3);
    for (std::size_t k = 1; k < pts.size(); ++k) {
      REQUIRE(pts[k].fppi > pts[k - 1].fppi);
      REQUIRE(pts[k].miss_rate <= pts[k - 1].miss_rate);
    }
  }
}

TEST_CASE("metrics depend on rank only") {
  placedet::detail::Rng rng(303);
  for (int t = 0; t < 20; ++t) {
    int n_gt = 0;
    auto flags = random_instance(rng, n_gt);
    auto [ap1, pr1] = eval::average_precision(flags, n_gt);
    auto [lamr1, p1] = eval::log_average_miss_rate(flags, n_gt, 2);
    const double alpha = rng.uniform(0.1, 10.0);
    auto scaled = flags;
    for (auto& f : scaled) f.score *= alpha;
    auto [ap2, pr2] = eval::average_precision(scaled, n_gt);
    auto [lamr2, p2] = eval::log_average_miss_rate(scaled, n_gt, 2);
    REQUIRE(ap1 == ap2);
    REQUIRE(lamr1 == lamr2);
    REQUIRE(eval::max_f1(pr1) == eval::max_f1(pr2));
  }
}

TEST_CASE("appending a lowest-rank FP never raises AP, a new TP never lowers it") {
  placedet::detail::Rng rng(404);
  for (int t = 0; t < 20; ++t) {
    int n_gt = 0;
    auto flags = random_instance(rng, n_gt);
    auto [ap0, pr0] = eval::average_precision(flags, n_gt);

    double min_score = 0.0;
    for (const auto& f : flags) min_score = std::min(min_score, f.score);
    auto with_fp = flags;
    with_fp.push_back({min_score - 1.0, false});
    auto [ap_fp, prf] = eval::average_precision(with_fp, n_gt);
    REQUIRE(ap_fp <= ap0 + 1e-15);

    int tp_count = 0;
    for (const auto& f : flags) tp_count += f.tp ? 1 : 0;
    if (tp_count < n_gt) {
      auto with_tp = flags;
      with_tp.push_back({min_score - 1.0, true});
      auto [ap_tp, prt] = eval::average_precision(with_tp, n_gt);
      REQUIRE(ap_tp >= ap0 - 1e-15);
    }
  }
}

TEST_CASE("evaluate aggregates per-image matching") {
  std::vector<eval::FrameGroundTruth> frames(2);
  frames[0].ground_truth = {{0, 0, 10, 10}};
  frames[0].detections = {det(0, 0, 10, 10, 0.9)};
  frames[1].ground_truth = {{5, 5, 10, 10}};
  frames[1].detections = {det(30, 30, 10, 10, 0.8)};
  const auto r = eval::evaluate(frames);
  REQUIRE(r.counts.n_images == 2);
  REQUIRE(r.counts.n_ground_truth == 2);
  REQUIRE(r.counts.n_detections == 2);
  REQUIRE(r.ap == Catch::Approx(0.5));
  // Best operating point is rank 1: recall 0.5, precision 1.0.
  REQUIRE(r.max_f1 == Catch::Approx(2.0 / 3.0));
  REQUIRE_THROWS_AS(eval::evaluate({}), DegenerateDataError);
}
