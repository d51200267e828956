#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "placedet/dataio.hpp"
#include "placedet/experiment.hpp"
#include "placedet/manifest.hpp"
#include "placedet/pipeline.hpp"
#include "placedet/synth.hpp"

namespace placedet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline WindowSize parse_size(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) {
    throw InvalidInputError("expected WIDTHxHEIGHT, got '" + s + "'");
  }
  WindowSize w;
  w.w = static_cast<int>(placedet::detail::parse_i64(s.substr(0, x), "size"));
  w.h = static_cast<int>(placedet::detail::parse_i64(s.substr(x + 1), "size"));
  if (w.w < 1 || w.h < 1) throw InvalidInputError("size must be positive");
  return w;
}

namespace detail_cli {

// Options shared by every command that runs the detector pipeline.
struct PipelineOpts {
  std::uint64_t seed = 0;
  int jobs = 0;
  std::string window = "64x128";
  int stride_cells = 2;
  int shrink = 4;
  int scales_per_octave = 8;
  double nms_overlap = 0.5;
  double score_threshold = 0.0;
  int hnm_iterations = 20;
  int per_image_cap = 10;
  double mining_score_min = -1.0;
  double fp_iou_max = 0.5;
  int seed_patches = 10;
  double svm_c = 100.0;
  double svm_tolerance = 1e-4;
  int svm_epochs = 2000;

  mining::HnmConfig hnm() const {
    mining::HnmConfig cfg;
    cfg.max_iterations = hnm_iterations;
    cfg.per_image_cap = per_image_cap;
    cfg.mining_score_min = mining_score_min;
    cfg.fp_iou_max = fp_iou_max;
    cfg.seed_patches_per_negative_image = seed_patches;
    cfg.svm.C = svm_c;
    cfg.svm.tolerance = svm_tolerance;
    cfg.svm.max_epochs = svm_epochs;
    cfg.detect.window = parse_size(window);
    cfg.detect.stride_cells = stride_cells;
    cfg.detect.score_threshold = score_threshold;
    cfg.detect.nms_overlap = nms_overlap;
    cfg.pyramid.shrink = shrink;
    cfg.pyramid.scales_per_octave = scales_per_octave;
    cfg.pyramid.min_window = cfg.detect.window;
    return cfg;
  }

  json to_json() const {
    return dataio::detail_io::hnm_config_to_json(hnm());
  }
};

inline void add_pipeline_options(CLI::App* cmd, PipelineOpts& o,
                                 bool with_hnm = true) {
  cmd->add_option("--seed", o.seed, "seed for all randomness");
  cmd->add_option("--jobs", o.jobs, "worker threads (0 = hardware)");
  cmd->add_option("--window", o.window, "model window, WxH pixels");
  cmd->add_option("--stride", o.stride_cells, "window stride in cells");
  cmd->add_option("--shrink", o.shrink, "pixels per feature cell");
  cmd->add_option("--scales-per-octave", o.scales_per_octave,
                  "pyramid scales per octave");
  cmd->add_option("--nms", o.nms_overlap, "NMS IoU threshold");
  cmd->add_option("--threshold", o.score_threshold, "detection score threshold");
  if (with_hnm) {
    cmd->add_option("--hnm-iterations", o.hnm_iterations,
                    "hard negative mining iteration cap");
    cmd->add_option("--per-image-cap", o.per_image_cap,
                    "new negatives added per image per round");
    cmd->add_option("--mining-threshold", o.mining_score_min,
                    "minimum score for a minable window");
    cmd->add_option("--fp-iou", o.fp_iou_max,
                    "IoU with ground truth above which a window is not mined");
    cmd->add_option("--seed-patches", o.seed_patches,
                    "random seed patches per negative image");
    cmd->add_option("--svm-c", o.svm_c, "SVM misclassification cost C");
    cmd->add_option("--svm-tolerance", o.svm_tolerance,
                    "relative duality-gap stop");
    cmd->add_option("--svm-epochs", o.svm_epochs, "solver epoch cap");
  }
}

inline std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto part : placedet::detail::split_csv(s)) {
    out.push_back(static_cast<int>(placedet::detail::parse_i64(part, "list")));
  }
  return out;
}

inline fs::path curve_prefix(const std::string& arg) {
  std::string s = arg;
  if (s.size() > 4 && s.substr(s.size() - 4) == ".csv") {
    s = s.substr(0, s.size() - 4);
  }
  return fs::path(s);
}

inline void write_curves(const eval::EvalResult& r, const fs::path& prefix) {
  std::string pr = "recall,precision\n";
  for (const auto& p : r.pr_points) {
    pr += placedet::detail::format_double(p.recall);
    pr += ',';
    pr += placedet::detail::format_double(p.precision);
    pr += '\n';
  }
  dataio::write_file_atomic(fs::path(prefix.string() + "_pr.csv"), pr);
  std::string mr = "fppi,miss_rate\n";
  for (const auto& p : r.mr_fppi_points) {
    mr += placedet::detail::format_double(p.fppi);
    mr += ',';
    mr += placedet::detail::format_double(p.miss_rate);
    mr += '\n';
  }
  dataio::write_file_atomic(fs::path(prefix.string() + "_mrfppi.csv"), mr);
}

inline json eval_summary_json(const eval::EvalResult& r) {
  return json{{"ap", r.ap},
              {"lamr", r.lamr},
              {"max_f1", r.max_f1},
              {"counts",
               {{"n_detections", r.counts.n_detections},
                {"n_ground_truth", r.counts.n_ground_truth},
                {"n_images", r.counts.n_images}}}};
}

}  // namespace detail_cli

// Batch front end. Returns the process exit code: 0 success, 1 usage
// error, 2 data/processing error.
inline int run(std::vector<std::string> args) {
  CLI::App app{"place-fitted pedestrian detector ensembles"};
  app.require_subcommand(1);

  using detail_cli::PipelineOpts;

  // --- synth ---------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic route dataset");
  std::string synth_out;
  synth::SynthConfig synth_cfg;
  std::string synth_image = "256x192", synth_figure = "64x128";
  synth_cmd->add_option("--out", synth_out, "output dataset directory")->required();
  synth_cmd->add_option("--seed", synth_cfg.rng_seed, "generator seed");
  synth_cmd->add_option("--places", synth_cfg.n_places, "places per lap");
  synth_cmd->add_option("--frames-per-place", synth_cfg.frames_per_place,
                        "frames per place per lap");
  synth_cmd->add_option("--laps", synth_cfg.n_laps, "route traversals");
  synth_cmd->add_option("--pedestrian-rate", synth_cfg.pedestrian_rate,
                        "per-frame pedestrian probability");
  synth_cmd->add_option("--pose-noise", synth_cfg.pose_noise_sigma,
                        "cross-lap pose noise sigma, metres");
  synth_cmd->add_option("--image-size", synth_image, "frame size, WxH");
  synth_cmd->add_option("--figure-size", synth_figure, "figure size, WxH");
  synth_cmd->add_option("--positives", synth_cfg.n_positive_crops,
                        "positive crops to render");
  synth_cmd->add_option("--negatives", synth_cfg.n_negative_images,
                        "negative images to render");

  // --- train-generic -------------------------------------------------------
  auto* generic_cmd = app.add_subcommand(
      "train-generic",
      "train the generic-data baseline (mining on negative images only)");
  std::string generic_dataset, generic_out;
  PipelineOpts generic_opts;
  generic_cmd->add_option("--dataset", generic_dataset, "dataset root")->required();
  generic_cmd->add_option("--out", generic_out, "output model JSON")->required();
  detail_cli::add_pipeline_options(generic_cmd, generic_opts);

  // --- build-bank ----------------------------------------------------------
  auto* bank_cmd = app.add_subcommand("build-bank",
                                      "build a per-frame model bank for one lap");
  std::string bank_dataset, bank_out, bank_method = "temporal";
  int bank_lap = 0, bank_N = 10;
  PipelineOpts bank_opts;
  bank_cmd->add_option("--dataset", bank_dataset, "dataset root")->required();
  bank_cmd->add_option("--out", bank_out, "output bank file")->required();
  bank_cmd->add_option("--lap", bank_lap, "lap to build on");
  bank_cmd->add_option("--method", bank_method, "temporal | gist | mi");
  bank_cmd->add_option("--swathe", bank_N, "frames per swathe (0 = full lap)");
  detail_cli::add_pipeline_options(bank_cmd, bank_opts);

  // --- detect ---------------------------------------------------------------
  auto* detect_cmd = app.add_subcommand("detect", "run a model or bank over frames");
  std::string detect_dataset, detect_out, detect_bank, detect_model;
  int detect_lap = -1;
  PipelineOpts detect_opts;
  detect_cmd->add_option("--dataset", detect_dataset, "dataset root")->required();
  detect_cmd->add_option("--out", detect_out, "output detections CSV")->required();
  detect_cmd->add_option("--bank", detect_bank, "bank file (pose retrieval)");
  detect_cmd->add_option("--model", detect_model, "single model JSON");
  detect_cmd->add_option("--lap", detect_lap, "restrict to one lap (-1 = all)");
  detail_cli::add_pipeline_options(detect_cmd, detect_opts, false);

  // --- eval ----------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "score detections against ground truth");
  std::string eval_dets, eval_gt, eval_curves, eval_summary;
  int eval_lap = -1;
  double eval_iou = 0.5;
  eval_cmd->add_option("--dets", eval_dets, "detections CSV")->required();
  eval_cmd->add_option("--gt", eval_gt, "dataset root with ground truth")->required();
  eval_cmd->add_option("--lap", eval_lap, "restrict to one lap (-1 = all)");
  eval_cmd->add_option("--curves", eval_curves,
                       "curve CSV prefix (writes <prefix>_pr.csv and "
                       "<prefix>_mrfppi.csv)");
  eval_cmd->add_option("--summary", eval_summary, "summary JSON path");
  eval_cmd->add_option("--iou", eval_iou, "matching IoU threshold");

  // --- similarity ----------------------------------------------------------
  auto* sim_cmd = app.add_subcommand("similarity", "all-pairs image similarity");
  std::string sim_dataset, sim_out, sim_csv, sim_metric = "gist";
  int sim_lap = -1, sim_jobs = 0;
  sim_cmd->add_option("--dataset", sim_dataset, "dataset root")->required();
  sim_cmd->add_option("--out", sim_out, "output matrix file")->required();
  sim_cmd->add_option("--csv", sim_csv, "optional CSV export");
  sim_cmd->add_option("--metric", sim_metric, "gist | mi");
  sim_cmd->add_option("--lap", sim_lap, "restrict to one lap (-1 = all)");
  sim_cmd->add_option("--jobs", sim_jobs, "worker threads");

  // --- experiment ----------------------------------------------------------
  auto* exp_cmd = app.add_subcommand("experiment", "run a full protocol");
  std::string exp_mode, exp_dataset, exp_out, exp_methods = "temporal";
  std::string exp_swathes = "1,10";
  bool exp_no_full = false, exp_no_generic = false;
  PipelineOpts exp_opts;
  exp_cmd->add_option("mode", exp_mode, "protocol name (cross-lap)")->required();
  exp_cmd->add_option("--dataset", exp_dataset, "dataset root")->required();
  exp_cmd->add_option("--out", exp_out, "output directory")->required();
  exp_cmd->add_option("--swathes", exp_swathes, "comma-separated N values");
  exp_cmd->add_option("--methods", exp_methods,
                      "comma-separated methods (temporal,gist,mi)");
  exp_cmd->add_flag("--no-full-lap", exp_no_full, "skip the full-lap model");
  exp_cmd->add_flag("--no-generic", exp_no_generic, "skip the generic baseline");
  detail_cli::add_pipeline_options(exp_cmd, exp_opts);

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth_cmd->parsed()) {
      RunTimer timer;
      synth_cfg.image_size = parse_size(synth_image);
      synth_cfg.figure_size = parse_size(synth_figure);
      const auto ds = synth::generate_synthetic(synth_cfg, synth_out);
      RunManifest m;
      m.command = "synth";
      m.config = {{"n_places", synth_cfg.n_places},
                  {"frames_per_place", synth_cfg.frames_per_place},
                  {"n_laps", synth_cfg.n_laps},
                  {"pose_noise_sigma", synth_cfg.pose_noise_sigma},
                  {"pedestrian_rate", synth_cfg.pedestrian_rate},
                  {"image_size", synth_image},
                  {"figure_size", synth_figure},
                  {"n_positive_crops", synth_cfg.n_positive_crops},
                  {"n_negative_images", synth_cfg.n_negative_images}};
      m.rng_seed = synth_cfg.rng_seed;
      m.outputs = {fs::path(synth_out) / "frames.csv",
                   fs::path(synth_out) / "annotations.csv"};
      m.duration_seconds = timer.seconds();
      write_run_manifest(m, fs::path(synth_out) / "run_manifest.json");
      std::cout << "generated " << ds.frames.size() << " frames, "
                << ds.positives.size() << " positives, "
                << ds.negative_images.size() << " negative images under "
                << synth_out << "\n";
    } else if (generic_cmd->parsed()) {
      RunTimer timer;
      const auto cfg = generic_opts.hnm();
      const auto ds = dataio::load_dataset(generic_dataset);
      const auto positives = pipeline::load_positive_features(
          ds, cfg.detect.window, cfg.pyramid.shrink, generic_opts.jobs);
      const auto seeds = pipeline::sample_seed_negatives(
          ds, cfg.detect.window, cfg.pyramid.shrink,
          cfg.seed_patches_per_negative_image, generic_opts.seed,
          generic_opts.jobs);
      const auto res = pipeline::train_generic(ds, positives, seeds, cfg);
      json meta = {{"hnm_iterations", res.report.iterations_run},
                   {"hnm_converged", res.report.converged},
                   {"final_objective", res.report.final_objective},
                   {"final_training_errors", res.report.final_training_errors},
                   {"seed", generic_opts.seed}};
      dataio::save_model(res.model, generic_out, meta);
      RunManifest m;
      m.command = "train-generic";
      m.config = generic_opts.to_json();
      m.rng_seed = generic_opts.seed;
      m.inputs = {fs::path(generic_dataset) / "frames.csv"};
      m.outputs = {generic_out};
      m.duration_seconds = timer.seconds();
      write_run_manifest(m, generic_out + ".manifest.json");
      std::cout << "trained generic model: hnm iterations "
                << res.report.iterations_run
                << (res.report.converged ? " (converged)" : " (cap reached)")
                << "\n";
    } else if (bank_cmd->parsed()) {
      RunTimer timer;
      auto cfg = bank_opts.hnm();
      const auto ds = dataio::load_dataset(bank_dataset);
      bank::BankConfig bcfg;
      bcfg.method = bank::swathe_method_from_name(bank_method);
      bcfg.N = bank_N == 0 ? static_cast<int>(ds.lap_frames(bank_lap).size())
                           : bank_N;
      bcfg.hnm = cfg;
      const auto positives = pipeline::load_positive_features(
          ds, cfg.detect.window, cfg.pyramid.shrink, bank_opts.jobs);
      const auto seeds = pipeline::sample_seed_negatives(
          ds, cfg.detect.window, cfg.pyramid.shrink,
          cfg.seed_patches_per_negative_image, bank_opts.seed, bank_opts.jobs);
      pipeline::PyramidCache pyramids(ds, cfg.pyramid);
      const auto built = pipeline::build_bank_for_lap(
          ds, bank_lap, bcfg, positives, seeds, pyramids, bank_opts.jobs);
      dataio::save_bank(built, bank_out);
      RunManifest m;
      m.command = "build-bank";
      m.config = bank_opts.to_json();
      m.config["method"] = bank_method;
      m.config["swathe"] = bcfg.N;
      m.config["lap"] = bank_lap;
      m.rng_seed = bank_opts.seed;
      m.inputs = {fs::path(bank_dataset) / "frames.csv"};
      m.outputs = {bank_out};
      m.duration_seconds = timer.seconds();
      write_run_manifest(m, bank_out + ".manifest.json");
      const auto stats = experiment::bank_stats_of({built});
      std::cout << "built bank with " << built.entries.size() << " entries ("
                << stats.converged_entries << " converged, "
                << stats.zero_error_entries << " at zero training error)\n";
    } else if (detect_cmd->parsed()) {
      RunTimer timer;
      if (detect_bank.empty() == detect_model.empty()) {
        std::cerr << "detect: exactly one of --bank or --model is required\n";
        return 1;
      }
      const auto ds = dataio::load_dataset(detect_dataset);
      auto cfg = detect_opts.hnm();
      detector::DetectConfig dcfg = cfg.detect;
      const auto frames =
          detect_lap < 0 ? ds.frames : ds.lap_frames(detect_lap);
      if (frames.empty()) throw DegenerateDataError("no frames selected");
      std::vector<pipeline::FrameDetections> runs;
      if (!detect_bank.empty()) {
        const auto b = dataio::load_bank(detect_bank);
        dcfg.window = b.config.hnm.detect.window;
        runs = pipeline::detect_with_bank(ds, frames, b, dcfg, cfg.pyramid,
                                          detect_opts.jobs);
      } else {
        const auto model = dataio::load_model(detect_model);
        dcfg.window = model.window;
        PyramidConfig pcfg = cfg.pyramid;
        pcfg.shrink = model.shrink;
        runs = pipeline::detect_with_model(ds, frames, model, dcfg, pcfg,
                                           detect_opts.jobs);
      }
      dataio::write_file_atomic(detect_out, pipeline::detections_to_csv(runs));
      RunManifest m;
      m.command = "detect";
      m.config = detect_opts.to_json();
      m.config["lap"] = detect_lap;
      m.rng_seed = detect_opts.seed;
      m.inputs = {fs::path(detect_dataset) / "frames.csv"};
      if (!detect_bank.empty()) m.inputs.push_back(detect_bank);
      if (!detect_model.empty()) m.inputs.push_back(detect_model);
      m.outputs = {detect_out};
      m.duration_seconds = timer.seconds();
      write_run_manifest(m, detect_out + ".manifest.json");
      std::size_t total = 0;
      for (const auto& r : runs) total += r.detections.size();
      std::cout << "detections: " << total << " over " << frames.size()
                << " frames\n";
    } else if (eval_cmd->parsed()) {
      RunTimer timer;
      const auto ds = dataio::load_dataset(eval_gt);
      const auto frames = eval_lap < 0 ? ds.frames : ds.lap_frames(eval_lap);
      if (frames.empty()) throw DegenerateDataError("no frames selected");
      const auto dets =
          pipeline::detections_from_csv(dataio::read_file_bytes(eval_dets));
      std::vector<eval::FrameGroundTruth> merged;
      for (const auto& f : frames) {
        eval::FrameGroundTruth fg;
        const auto it = dets.find(f.frame_id);
        if (it != dets.end()) fg.detections = it->second;
        fg.ground_truth = ds.annotations.at(f.frame_id);
        merged.push_back(std::move(fg));
      }
      const auto result = eval::evaluate(merged, eval_iou);
      const json summary = detail_cli::eval_summary_json(result);
      std::cout << summary.dump(2) << "\n";
      RunManifest m;
      m.command = "eval";
      m.config = {{"iou", eval_iou}, {"lap", eval_lap}};
      m.inputs = {eval_dets, fs::path(eval_gt) / "annotations.csv"};
      if (!eval_curves.empty()) {
        const auto prefix = detail_cli::curve_prefix(eval_curves);
        detail_cli::write_curves(result, prefix);
        m.outputs.push_back(prefix.string() + "_pr.csv");
        m.outputs.push_back(prefix.string() + "_mrfppi.csv");
      }
      if (!eval_summary.empty()) {
        dataio::write_file_atomic(eval_summary, summary.dump(2) + "\n");
        m.outputs.push_back(eval_summary);
      }
      m.duration_seconds = timer.seconds();
      const fs::path manifest_path =
          !eval_summary.empty()
              ? fs::path(eval_summary + ".manifest.json")
              : fs::path(eval_dets + ".eval.manifest.json");
      write_run_manifest(m, manifest_path);
    } else if (sim_cmd->parsed()) {
      RunTimer timer;
      const auto ds = dataio::load_dataset(sim_dataset);
      const auto frames = sim_lap < 0 ? ds.frames : ds.lap_frames(sim_lap);
      if (frames.empty()) throw DegenerateDataError("no frames selected");
      similarity::Metric metric;
      if (sim_metric == "gist") {
        metric = similarity::Metric::gist_l2;
      } else if (sim_metric == "mi") {
        metric = similarity::Metric::mutual_information;
      } else {
        std::cerr << "similarity: unknown metric '" << sim_metric << "'\n";
        return 1;
      }
      similarity::SimilarityConfig scfg;
      scfg.jobs = sim_jobs;
      const auto matrix = pipeline::frames_similarity(ds, frames, metric, scfg);
      dataio::save_similarity(matrix, sim_out);
      RunManifest m;
      m.command = "similarity";
      m.config = {{"metric", sim_metric}, {"lap", sim_lap}};
      m.inputs = {fs::path(sim_dataset) / "frames.csv"};
      m.outputs = {sim_out};
      if (!sim_csv.empty()) {
        dataio::export_similarity_csv(matrix, sim_csv);
        m.outputs.push_back(sim_csv);
      }
      m.duration_seconds = timer.seconds();
      write_run_manifest(m, sim_out + ".manifest.json");
      std::cout << "similarity matrix over " << matrix.n << " frames\n";
    } else if (exp_cmd->parsed()) {
      if (exp_mode != "cross-lap") {
        std::cerr << "experiment: unknown mode '" << exp_mode
                  << "' (expected cross-lap)\n";
        return 1;
      }
      RunTimer timer;
      const auto ds = dataio::load_dataset(exp_dataset);
      experiment::CrossLapConfig cfg;
      cfg.hnm = exp_opts.hnm();
      cfg.swathe_sizes = detail_cli::parse_int_list(exp_swathes);
      cfg.methods.clear();
      for (const auto part : placedet::detail::split_csv(exp_methods)) {
        cfg.methods.push_back(bank::swathe_method_from_name(std::string(part)));
      }
      cfg.include_full_lap = !exp_no_full;
      cfg.include_generic = !exp_no_generic;
      cfg.jobs = exp_opts.jobs;
      cfg.seed = exp_opts.seed;
      fs::create_directories(exp_out);
      const auto result = experiment::run_cross_lap(ds, cfg);

      RunManifest m;
      m.command = "experiment cross-lap";
      m.config = exp_opts.to_json();
      m.config["swathes"] = exp_swathes;
      m.config["methods"] = exp_methods;
      m.config["full_lap"] = cfg.include_full_lap;
      m.config["generic"] = cfg.include_generic;
      m.rng_seed = exp_opts.seed;
      m.inputs = {fs::path(exp_dataset) / "frames.csv",
                  fs::path(exp_dataset) / "annotations.csv"};
      for (const auto& c : result.configs) {
        for (std::size_t li = 0; li < c.banks.size(); ++li) {
          const fs::path p = fs::path(exp_out) /
                             ("bank_" + c.name + "_lap" +
                              std::to_string(result.laps[li]) + ".bank");
          dataio::save_bank(c.banks[li], p);
          m.outputs.push_back(p);
        }
      }
      if (result.generic.has_value()) {
        const fs::path p = fs::path(exp_out) / "model_generic.json";
        dataio::save_model(result.generic->model, p,
                           {{"hnm_iterations", result.generic->report.iterations_run},
                            {"hnm_converged", result.generic->report.converged}});
        m.outputs.push_back(p);
      }
      const json summary = experiment::summary_json(result);
      const fs::path summary_path = fs::path(exp_out) / "summary.json";
      dataio::write_file_atomic(summary_path, summary.dump(2) + "\n");
      m.outputs.push_back(summary_path);
      m.duration_seconds = timer.seconds();
      write_run_manifest(m, fs::path(exp_out) / "run_manifest.json");
      std::cout << summary.dump(2) << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace placedet::cli
