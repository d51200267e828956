#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "placedet/dataio.hpp"

namespace placedet::cli {

// Reproducibility record written next to every command's outputs: the
// command, its fully resolved configuration, the seed, and checksums of
// inputs and outputs.
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t rng_seed = 0;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  double duration_seconds = 0.0;
};

class RunTimer {
public:
  RunTimer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

inline void write_run_manifest(const RunManifest& m,
                               const std::filesystem::path& path) {
  nlohmann::json j;
  j["command"] = m.command;
  j["config"] = m.config;
  j["rng_seed"] = m.rng_seed;
  auto checksum_list = [](const std::vector<std::filesystem::path>& paths) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : paths) {
      char crc[16];
      std::snprintf(crc, sizeof(crc), "%08x", dataio::file_crc32(p));
      arr.push_back({{"path", p.string()}, {"crc32", crc}});
    }
    return arr;
  };
  j["inputs"] = checksum_list(m.inputs);
  j["outputs"] = checksum_list(m.outputs);
  j["duration_seconds"] = m.duration_seconds;
  dataio::write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace placedet::cli
