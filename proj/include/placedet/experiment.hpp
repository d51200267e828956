#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "placedet/dataio.hpp"
#include "placedet/pipeline.hpp"

namespace placedet::experiment {

// The cross-lap protocol: for each configuration, build a model bank on
// every lap, run the detector over each frame of the *other* lap with
// pose-based model retrieval, and aggregate one set of metrics over all
// test frames. N = 0 stands for the full lap (the all-frames model).
struct CrossLapConfig {
  std::vector<int> swathe_sizes = {1, 10};
  std::vector<bank::SwatheMethod> methods = {bank::SwatheMethod::temporal};
  bool include_full_lap = true;
  bool include_generic = true;
  mining::HnmConfig hnm;
  double eval_score_threshold = -1.0;  // low threshold for full curves
  double eval_iou_min = 0.5;
  int jobs = 0;
  std::uint64_t seed = 0;
};

struct BankStats {
  int entries = 0;
  int converged_entries = 0;
  int zero_error_entries = 0;
  int max_training_errors = 0;
};

struct ConfigOutcome {
  std::string name;
  bank::SwatheMethod method = bank::SwatheMethod::temporal;
  int requested_N = 0;  // 0 = full lap
  eval::EvalResult metrics;
  BankStats bank_stats;
  std::vector<bank::ModelBank> banks;  // one per lap, lap order
};

struct GenericOutcome {
  svm::LinearModel model;
  mining::HnmReport report;
  eval::EvalResult metrics;
};

struct CrossLapResult {
  std::vector<int> laps;
  std::vector<ConfigOutcome> configs;
  std::optional<GenericOutcome> generic;
};

inline BankStats bank_stats_of(const std::vector<bank::ModelBank>& banks) {
  BankStats s;
  for (const auto& b : banks) {
    for (const auto& e : b.entries) {
      ++s.entries;
      if (e.report.converged) ++s.converged_entries;
      if (e.report.final_training_errors == 0) ++s.zero_error_entries;
      s.max_training_errors =
          std::max(s.max_training_errors, e.report.final_training_errors);
    }
  }
  return s;
}

inline CrossLapResult run_cross_lap(const dataio::Dataset& ds,
                                    const CrossLapConfig& cfg) {
  CrossLapResult result;
  result.laps = ds.lap_ids();
  if (result.laps.size() < 2) {
    throw DegenerateDataError("cross-lap experiment needs at least two laps");
  }
  const std::vector<int> laps(result.laps.begin(), result.laps.begin() + 2);

  const WindowSize window = cfg.hnm.detect.window;
  const int shrink = cfg.hnm.pyramid.shrink;
  const auto positives =
      pipeline::load_positive_features(ds, window, shrink, cfg.jobs);
  const auto seeds = pipeline::sample_seed_negatives(
      ds, window, shrink, cfg.hnm.seed_patches_per_negative_image, cfg.seed,
      cfg.jobs);

  PyramidConfig pcfg = cfg.hnm.pyramid;
  pcfg.min_window = window;
  pipeline::PyramidCache pyramids(ds, pcfg);

  detector::DetectConfig eval_detect = cfg.hnm.detect;
  eval_detect.score_threshold = cfg.eval_score_threshold;

  // Similarity matrices are per (metric, lap), shared across N values.
  std::map<std::pair<int, int>, similarity::SimilarityMatrix> sim_cache;
  const auto sim_for = [&](bank::SwatheMethod method, int lap)
      -> const similarity::SimilarityMatrix* {
    if (method == bank::SwatheMethod::temporal) return nullptr;
    const int metric_id = method == bank::SwatheMethod::gist ? 0 : 1;
    const auto key = std::make_pair(metric_id, lap);
    auto it = sim_cache.find(key);
    if (it == sim_cache.end()) {
      similarity::SimilarityConfig scfg;
      scfg.jobs = cfg.jobs;
      it = sim_cache
               .emplace(key, pipeline::frames_similarity(
                                 ds, ds.lap_frames(lap),
                                 method == bank::SwatheMethod::gist
                                     ? similarity::Metric::gist_l2
                                     : similarity::Metric::mutual_information,
                                 scfg))
               .first;
    }
    return &it->second;
  };

  struct Job {
    bank::SwatheMethod method;
    int n;  // 0 = full lap
  };
  std::vector<Job> jobs_list;
  for (auto method : cfg.methods) {
    for (int n : cfg.swathe_sizes) jobs_list.push_back({method, n});
  }
  if (cfg.include_full_lap) {
    jobs_list.push_back({bank::SwatheMethod::temporal, 0});
  }

  for (const auto& job : jobs_list) {
    ConfigOutcome outcome;
    outcome.method = job.method;
    outcome.requested_N = job.n;
    outcome.name = bank::swathe_method_name(job.method) +
                   (job.n == 0 ? std::string("_full") :
                                 "_N" + std::to_string(job.n));

    std::vector<eval::FrameGroundTruth> merged;
    for (std::size_t li = 0; li < laps.size(); ++li) {
      const int map_lap = laps[li];
      const int query_lap = laps[(li + 1) % laps.size()];
      bank::BankConfig bcfg;
      bcfg.method = job.method;
      bcfg.N = job.n == 0 ? static_cast<int>(ds.lap_frames(map_lap).size())
                          : job.n;
      bcfg.hnm = cfg.hnm;
      auto built = pipeline::build_bank_for_lap(ds, map_lap, bcfg, positives,
                                                seeds, pyramids, cfg.jobs,
                                                sim_for(job.method, map_lap));
      // The protocol's isolation guarantee: no training swathe may touch
      // the lap it will be queried from.
      for (const auto& e : built.entries) {
        for (auto id : e.swathe) {
          if (ds.frame(id).lap_id == query_lap) {
            throw Error("cross-lap isolation violated for frame " +
                        std::to_string(e.frame_id));
          }
        }
      }
      const auto runs =
          pipeline::detect_with_bank(ds, ds.lap_frames(query_lap), built,
                                     eval_detect, pcfg, cfg.jobs, &pyramids);
      for (const auto& fd : runs) {
        eval::FrameGroundTruth fg;
        fg.detections = fd.detections;
        fg.ground_truth = ds.annotations.at(fd.frame_id);
        merged.push_back(std::move(fg));
      }
      outcome.banks.push_back(std::move(built));
    }
    outcome.metrics = eval::evaluate(merged, cfg.eval_iou_min);
    outcome.bank_stats = bank_stats_of(outcome.banks);
    result.configs.push_back(std::move(outcome));
  }

  if (cfg.include_generic) {
    GenericOutcome gen;
    auto trained = pipeline::train_generic(ds, positives, seeds, cfg.hnm);
    gen.model = std::move(trained.model);
    gen.report = std::move(trained.report);
    std::vector<eval::FrameGroundTruth> merged;
    for (int lap : laps) {
      const auto runs =
          pipeline::detect_with_model(ds, ds.lap_frames(lap), gen.model,
                                      eval_detect, pcfg, cfg.jobs, &pyramids);
      for (const auto& fd : runs) {
        eval::FrameGroundTruth fg;
        fg.detections = fd.detections;
        fg.ground_truth = ds.annotations.at(fd.frame_id);
        merged.push_back(std::move(fg));
      }
    }
    gen.metrics = eval::evaluate(merged, cfg.eval_iou_min);
    result.generic = std::move(gen);
  }
  return result;
}

inline nlohmann::json summary_json(const CrossLapResult& result) {
  nlohmann::json j;
  j["laps"] = result.laps;
  nlohmann::json configs = nlohmann::json::array();
  for (const auto& c : result.configs) {
    configs.push_back(
        {{"name", c.name},
         {"method", bank::swathe_method_name(c.method)},
         {"N", c.requested_N},
         {"ap", c.metrics.ap},
         {"lamr", c.metrics.lamr},
         {"max_f1", c.metrics.max_f1},
         {"n_detections", c.metrics.counts.n_detections},
         {"n_ground_truth", c.metrics.counts.n_ground_truth},
         {"n_images", c.metrics.counts.n_images},
         {"bank", {{"entries", c.bank_stats.entries},
                   {"converged_entries", c.bank_stats.converged_entries},
                   {"zero_error_entries", c.bank_stats.zero_error_entries},
                   {"max_training_errors", c.bank_stats.max_training_errors}}}});
  }
  j["configs"] = std::move(configs);
  if (result.generic.has_value()) {
    const auto& g = *result.generic;
    j["generic"] = {{"ap", g.metrics.ap},
                    {"lamr", g.metrics.lamr},
                    {"max_f1", g.metrics.max_f1},
                    {"hnm_iterations", g.report.iterations_run},
                    {"hnm_converged", g.report.converged}};
  }
  return j;
}

}  // namespace placedet::experiment
