#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "helpers.hpp"
#include "placedet/cli.hpp"

using namespace placedet;
namespace fs = std::filesystem;

namespace {

int run_cli(std::initializer_list<std::string> args) {
  return cli::run(std::vector<std::string>(args));
}

std::vector<std::string> synth_args(const fs::path& out) {
  return {"synth",           "--out",
          out.string(),      "--places",
          "2",               "--frames-per-place",
          "4",               "--image-size",
          "96x96",           "--figure-size",
          "24x48",           "--positives",
          "5",               "--negatives",
          "3",               "--pedestrian-rate",
          "1.0"};
}

nlohmann::json read_json(const fs::path& p) {
  return nlohmann::json::parse(dataio::read_file_bytes(p));
}

}  // namespace

TEST_CASE("usage errors exit with code 1, help with 0") {
  REQUIRE(run_cli({"--help"}) == 0);
  REQUIRE(run_cli({"no-such-command"}) == 1);
  REQUIRE(run_cli({"eval", "--bogus-flag"}) == 1);
  REQUIRE(run_cli({"experiment", "warp-drive", "--dataset", "x", "--out", "y"}) == 1);
}

TEST_CASE("data errors exit with code 2") {
  helpers::TempDir tmp("cli_err");
  REQUIRE(run_cli({"build-bank", "--dataset", (tmp.path() / "nope").string(),
                   "--out", (tmp.path() / "b.bank").string()}) == 2);
}

TEST_CASE("synth writes a manifest and is reproducible through the CLI") {
  helpers::TempDir a("cli_synth_a");
  helpers::TempDir b("cli_synth_b");
  REQUIRE(cli::run(synth_args(a.path())) == 0);
  REQUIRE(cli::run(synth_args(b.path())) == 0);
  REQUIRE(fs::exists(a.path() / "run_manifest.json"));
  const auto ma = read_json(a.path() / "run_manifest.json");
  const auto mb = read_json(b.path() / "run_manifest.json");
  REQUIRE(ma.at("command") == "synth");
  REQUIRE(ma.at("rng_seed") == 0);
  // Same seed, same output checksums (paths naturally differ).
  std::vector<std::string> crc_a, crc_b;
  for (const auto& o : ma.at("outputs")) crc_a.push_back(o.at("crc32"));
  for (const auto& o : mb.at("outputs")) crc_b.push_back(o.at("crc32"));
  REQUIRE(crc_a == crc_b);
}

TEST_CASE("eval of the exact ground truth reports AP 1.0") {
  helpers::TempDir tmp("cli_eval");
  const fs::path ds_dir = tmp.path() / "ds";
  REQUIRE(cli::run(synth_args(ds_dir)) == 0);
  const auto ds = dataio::load_dataset(ds_dir);

  // Detections = the ground truth itself at fixed score.
  std::string dets = "frame_id,x,y,w,h,score\n";
  int n_gt = 0;
  for (const auto& f : ds.frames) {
    for (const auto& box : ds.annotations.at(f.frame_id)) {
      dets += placedet::detail::format_i64(f.frame_id) + "," +
              placedet::detail::format_double(box.x) + "," +
              placedet::detail::format_double(box.y) + "," +
              placedet::detail::format_double(box.w) + "," +
              placedet::detail::format_double(box.h) + ",1\n";
      ++n_gt;
    }
  }
  REQUIRE(n_gt > 0);
  const fs::path dets_path = tmp.path() / "dets.csv";
  dataio::write_file_atomic(dets_path, dets);

  const fs::path summary = tmp.path() / "summary.json";
  const fs::path curves = tmp.path() / "curves";
  REQUIRE(run_cli({"eval", "--dets", dets_path.string(), "--gt", ds_dir.string(),
                   "--summary", summary.string(), "--curves",
                   curves.string()}) == 0);
  const auto s = read_json(summary);
  REQUIRE(s.at("ap").get<double>() == 1.0);
  REQUIRE(s.at("max_f1").get<double>() == 1.0);
  REQUIRE(s.at("lamr").get<double>() == Catch::Approx(1e-4));
  REQUIRE(s.at("counts").at("n_ground_truth").get<int>() == n_gt);
  // Curve files carry the documented headers.
  std::ifstream pr(tmp.path() / "curves_pr.csv");
  std::string header;
  std::getline(pr, header);
  REQUIRE(header == "recall,precision");
  std::ifstream mr(tmp.path() / "curves_mrfppi.csv");
  std::getline(mr, header);
  REQUIRE(header == "fppi,miss_rate");
}

TEST_CASE("swathe of one builds the same bank for every method") {
  helpers::TempDir tmp("cli_n1");
  const fs::path ds_dir = tmp.path() / "ds";
  REQUIRE(cli::run(synth_args(ds_dir)) == 0);
  const fs::path bank_t = tmp.path() / "t.bank";
  const fs::path bank_g = tmp.path() / "g.bank";
  const std::vector<std::string> common = {
      "--dataset", ds_dir.string(), "--lap", "0", "--swathe", "1",
      "--window", "24x48", "--hnm-iterations", "3"};
  std::vector<std::string> args_t = {"build-bank", "--method", "temporal",
                                     "--out", bank_t.string()};
  std::vector<std::string> args_g = {"build-bank", "--method", "gist",
                                     "--out", bank_g.string()};
  args_t.insert(args_t.end(), common.begin(), common.end());
  args_g.insert(args_g.end(), common.begin(), common.end());
  REQUIRE(cli::run(args_t) == 0);
  REQUIRE(cli::run(args_g) == 0);
  const auto bt = dataio::load_bank(bank_t);
  const auto bg = dataio::load_bank(bank_g);
  REQUIRE(bt.entries.size() == bg.entries.size());
  for (std::size_t i = 0; i < bt.entries.size(); ++i) {
    REQUIRE(bt.entries[i].frame_id == bg.entries[i].frame_id);
    REQUIRE(bt.entries[i].swathe == bg.entries[i].swathe);
    REQUIRE(bt.entries[i].model.weights == bg.entries[i].model.weights);
    REQUIRE(bt.entries[i].model.bias == bg.entries[i].model.bias);
  }
}

TEST_CASE("experiment runs are reproducible and leave inputs untouched") {
  helpers::TempDir tmp("cli_exp");
  const fs::path ds_dir = tmp.path() / "ds";
  REQUIRE(cli::run(synth_args(ds_dir)) == 0);
  const auto frames_crc = dataio::file_crc32(ds_dir / "frames.csv");
  const auto ann_crc = dataio::file_crc32(ds_dir / "annotations.csv");

  auto exp_args = [&](const fs::path& out) {
    return std::vector<std::string>{
        "experiment", "cross-lap", "--dataset", ds_dir.string(), "--out",
        out.string(), "--swathes", "1,2", "--methods", "temporal",
        "--window", "24x48", "--hnm-iterations", "3", "--threshold", "-1",
        "--seed", "0"};
  };
  const fs::path out_a = tmp.path() / "exp_a";
  const fs::path out_b = tmp.path() / "exp_b";
  REQUIRE(cli::run(exp_args(out_a)) == 0);
  REQUIRE(cli::run(exp_args(out_b)) == 0);

  // Identical bank bytes and summary across runs. The run manifest itself
  // differs (absolute paths, wall-clock duration), but the output
  // checksums it records must agree.
  for (const auto& entry : fs::directory_iterator(out_a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = entry.path().filename();
    if (rel == "run_manifest.json") continue;
    CAPTURE(rel.string());
    REQUIRE(dataio::read_file_bytes(out_a / rel) ==
            dataio::read_file_bytes(out_b / rel));
  }
  {
    const auto ma = read_json(out_a / "run_manifest.json");
    const auto mb = read_json(out_b / "run_manifest.json");
    std::vector<std::string> crc_a, crc_b;
    for (const auto& o : ma.at("outputs")) crc_a.push_back(o.at("crc32"));
    for (const auto& o : mb.at("outputs")) crc_b.push_back(o.at("crc32"));
    REQUIRE(crc_a == crc_b);
  }
  // Inputs are untouched.
  REQUIRE(dataio::file_crc32(ds_dir / "frames.csv") == frames_crc);
  REQUIRE(dataio::file_crc32(ds_dir / "annotations.csv") == ann_crc);

  // The summary carries the per-config metrics the protocol promises.
  const auto summary = read_json(out_a / "summary.json");
  REQUIRE(summary.at("configs").size() == 3);  // N=1, N=2, full lap
  REQUIRE(summary.contains("generic"));
}
