#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "placedet/detail/parallel.hpp"
#include "placedet/errors.hpp"
#include "placedet/mining.hpp"
#include "placedet/similarity.hpp"

namespace placedet::bank {

// One dataset frame: image locator plus the pose used for run-time model
// retrieval. frame_ids are dense and ordered by capture time.
struct FrameRecord {
  std::int64_t frame_id = 0;
  int lap_id = 0;
  std::int64_t timestamp_us = 0;
  double x_m = 0.0;
  double y_m = 0.0;
  double heading_rad = 0.0;
  std::string image_relpath;
};

enum class SwatheMethod { temporal, gist, mutual_information };

inline std::string swathe_method_name(SwatheMethod m) {
  switch (m) {
    case SwatheMethod::temporal: return "temporal";
    case SwatheMethod::gist: return "gist";
    case SwatheMethod::mutual_information: return "mi";
  }
  return "temporal";
}

inline SwatheMethod swathe_method_from_name(const std::string& name) {
  if (name == "temporal") return SwatheMethod::temporal;
  if (name == "gist") return SwatheMethod::gist;
  if (name == "mi" || name == "mutual_information") return SwatheMethod::mutual_information;
  throw InvalidInputError("unknown swathe method '" + name + "'");
}

struct BankConfig {
  int N = 10;
  SwatheMethod method = SwatheMethod::temporal;
  mining::HnmConfig hnm;
};

struct BankEntry {
  std::int64_t frame_id = 0;
  svm::LinearModel model;
  std::vector<std::int64_t> swathe;
  mining::HnmReport report;
};

// Per-frame local-expert models over one set of map frames. Immutable
// after construction; retrieval is pose nearest-neighbour on (x, y).
struct ModelBank {
  BankConfig config;
  std::vector<FrameRecord> map_frames;   // ordered by frame_id
  std::vector<BankEntry> entries;        // parallel to map_frames
};

// Centered window of N positions over the ordered frame list, shifted
// (not shrunk) at the ends so exactly min(N, total) frames come back.
inline std::vector<std::int64_t> select_swathe_temporal(
    std::int64_t index_frame_id, int N,
    const std::vector<FrameRecord>& frames) {
  if (N < 1) throw InvalidInputError("select_swathe_temporal: N must be >= 1");
  const int total = static_cast<int>(frames.size());
  int pos = -1;
  for (int i = 0; i < total; ++i) {
    if (frames[i].frame_id == index_frame_id) {
      pos = i;
      break;
    }
  }
  if (pos < 0) {
    throw InvalidInputError("select_swathe_temporal: unknown index frame " +
                            std::to_string(index_frame_id));
  }
  const int count = std::min(N, total);
  int lo = pos - (count - 1) / 2;
  lo = std::clamp(lo, 0, total - count);
  std::vector<std::int64_t> out;
  out.reserve(count);
  for (int i = lo; i < lo + count; ++i) out.push_back(frames[i].frame_id);
  return out;
}

// N nearest frames by the given distance matrix. The index frame is always
// a member; remaining slots fill by ascending (distance, frame_id). The
// result is returned in ascending frame order so equal swathes compare
// equal regardless of method.
inline std::vector<std::int64_t> select_swathe_by_similarity(
    std::int64_t index_frame_id, int N, const std::vector<FrameRecord>& frames,
    const similarity::SimilarityMatrix& sim) {
  if (N < 1) throw InvalidInputError("select_swathe_by_similarity: N must be >= 1");
  const int total = static_cast<int>(frames.size());
  if (sim.n != total) {
    throw DimensionError("select_swathe_by_similarity: matrix does not cover frames");
  }
  int pos = -1;
  for (int i = 0; i < total; ++i) {
    if (frames[i].frame_id == index_frame_id) {
      pos = i;
      break;
    }
  }
  if (pos < 0) {
    throw InvalidInputError("select_swathe_by_similarity: unknown index frame " +
                            std::to_string(index_frame_id));
  }
  struct Scored {
    double d;
    std::int64_t id;
  };
  std::vector<Scored> others;
  others.reserve(total - 1);
  for (int i = 0; i < total; ++i) {
    if (i == pos) continue;
    others.push_back({sim.at(pos, i), frames[i].frame_id});
  }
  std::sort(others.begin(), others.end(), [](const Scored& a, const Scored& b) {
    if (a.d != b.d) return a.d < b.d;
    return a.id < b.id;
  });
  std::vector<std::int64_t> out;
  const int count = std::min(N, total);
  out.reserve(count);
  out.push_back(index_frame_id);
  for (int i = 0; i + 1 < count; ++i) out.push_back(others[i].id);
  std::sort(out.begin(), out.end());
  return out;
}

// Everything build_bank needs beyond the spec-level inputs: window
// features for the positive and seed-negative sets, pyramids and ground
// truth per frame, the similarity matrix for appearance methods.
struct BankBuildContext {
  std::vector<FrameRecord> frames;
  std::map<std::int64_t, std::vector<BoundingBox>> annotations;
  mining::FeatureSet positives;
  mining::FeatureSet seed_negatives;
  std::function<std::shared_ptr<const FeaturePyramid>(std::int64_t)> pyramid_of;
  const similarity::SimilarityMatrix* sim = nullptr;  // gist / mi methods
  int jobs = 0;
};

inline ModelBank build_bank(const BankBuildContext& ctx, const BankConfig& config) {
  if (ctx.frames.empty()) throw DegenerateDataError("build_bank: no frames");
  if (config.method != SwatheMethod::temporal && ctx.sim == nullptr) {
    throw InvalidInputError("build_bank: similarity matrix required for this method");
  }
  for (const auto& f : ctx.frames) {
    if (ctx.annotations.find(f.frame_id) == ctx.annotations.end()) {
      throw InvalidInputError("build_bank: frame " + std::to_string(f.frame_id) +
                              " has no annotation record");
    }
  }

  ModelBank bank;
  bank.config = config;
  bank.map_frames = ctx.frames;
  std::sort(bank.map_frames.begin(), bank.map_frames.end(),
            [](const FrameRecord& a, const FrameRecord& b) {
              return a.frame_id < b.frame_id;
            });
  const int n = static_cast<int>(bank.map_frames.size());
  bank.entries.resize(n);

  // Swathes are selected up front; identical swathes share one training.
  std::vector<std::vector<std::int64_t>> swathes(n);
  for (int i = 0; i < n; ++i) {
    const std::int64_t id = bank.map_frames[i].frame_id;
    swathes[i] = config.method == SwatheMethod::temporal
                     ? select_swathe_temporal(id, config.N, bank.map_frames)
                     : select_swathe_by_similarity(id, config.N,
                                                   bank.map_frames, *ctx.sim);
  }
  std::map<std::vector<std::int64_t>, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) groups[swathes[i]].push_back(i);
  std::vector<const std::vector<std::int64_t>*> group_keys;
  std::vector<const std::vector<int>*> group_members;
  for (const auto& [key, members] : groups) {
    group_keys.push_back(&key);
    group_members.push_back(&members);
  }

  const int jobs = ctx.jobs > 0 ? ctx.jobs : placedet::detail::default_jobs();
  std::vector<mining::HnmResult> results(group_keys.size());
  placedet::detail::parallel_for(group_keys.size(), jobs, [&](std::size_t g) {
    std::vector<mining::MiningFrame> training;
    training.reserve(group_keys[g]->size());
    for (std::int64_t fid : *group_keys[g]) {
      mining::MiningFrame mf;
      mf.frame_id = fid;
      mf.pyramid = ctx.pyramid_of(fid);
      mf.ground_truth = ctx.annotations.at(fid);
      training.push_back(std::move(mf));
    }
    results[g] = mining::train_with_hnm(ctx.positives, ctx.seed_negatives,
                                        training, config.hnm);
  });

  for (std::size_t g = 0; g < group_keys.size(); ++g) {
    for (int i : *group_members[g]) {
      BankEntry& e = bank.entries[i];
      e.frame_id = bank.map_frames[i].frame_id;
      e.model = results[g].model;
      e.report = results[g].report;
      e.swathe = swathes[i];
    }
  }
  return bank;
}

// Map frame whose (x, y) pose is nearest the query; ties go to the lower
// frame_id.
inline const BankEntry& retrieve_model(const ModelBank& bank, double x, double y) {
  if (bank.entries.empty()) throw DegenerateDataError("retrieve_model: empty bank");
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(bank.map_frames.size()); ++i) {
    const auto& f = bank.map_frames[i];
    const double dx = f.x_m - x;
    const double dy = f.y_m - y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return bank.entries[best];
}

}  // namespace placedet::bank
