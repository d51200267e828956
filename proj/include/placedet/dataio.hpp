#pragma once

#include <png.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "placedet/box.hpp"
#include "placedet/detail/crc32.hpp"
#include "placedet/detail/text.hpp"
#include "placedet/errors.hpp"
#include "placedet/image.hpp"
#include "placedet/placebank.hpp"

namespace placedet::dataio {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// PNG images

inline Image8 read_png(const fs::path& path) {
  std::FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw IoError("cannot open image '" + path.string() + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError("libpng init failed for '" + path.string() + "'");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw FormatError("unreadable image '" + path.string() + "'");
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  // Normalize every variant to 8-bit RGB.
  png_set_expand(png);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  png_set_strip_alpha(png);
  const png_byte color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_read_update_info(png, info);

  Image8 img(static_cast<int>(png_get_image_width(png, info)),
             static_cast<int>(png_get_image_height(png, info)));
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(img.width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw FormatError("unexpected row layout in '" + path.string() + "'");
  }
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y) {
    rows[y] = img.pixels.data() + static_cast<std::size_t>(y) * img.width * 3;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

inline void write_png(const fs::path& path, const Image8& img) {
  if (img.empty()) throw InvalidInputError("write_png: empty image");
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw IoError("cannot create image '" + path.string() + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng init failed for '" + path.string() + "'");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("write failed for '" + path.string() + "'");
  }
  png_init_io(png, fp);
  // Fixed settings keep encoded bytes reproducible.
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_SUB);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y) {
    rows[y] = const_cast<png_bytep>(img.pixels.data() +
                                    static_cast<std::size_t>(y) * img.width * 3);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

// ---------------------------------------------------------------------------
// Small file helpers

inline std::string read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write-then-rename so partially written outputs never appear under the
// final name.
inline void write_file_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

inline std::uint32_t file_crc32(const fs::path& path) {
  const std::string bytes = read_file_bytes(path);
  return placedet::detail::crc32(bytes.data(), bytes.size());
}

// ---------------------------------------------------------------------------
// Dataset manifests
//
// Layout under a dataset root:
//   frames.csv        frame_id,lap_id,timestamp_us,x_m,y_m,heading_rad,image_relpath
//   annotations.csv   frame_id,x,y,w,h
//   frames/ *.png     referenced by image_relpath
//   positives/ *.png  cropped positive windows
//   negatives/ *.png  images guaranteed free of the target class

struct Dataset {
  fs::path root;
  std::vector<bank::FrameRecord> frames;
  std::map<std::int64_t, std::vector<BoundingBox>> annotations;
  std::vector<std::string> positives;        // relpaths under root
  std::vector<std::string> negative_images;  // relpaths under root

  const bank::FrameRecord& frame(std::int64_t frame_id) const {
    for (const auto& f : frames) {
      if (f.frame_id == frame_id) return f;
    }
    throw InvalidInputError("dataset: unknown frame " + std::to_string(frame_id));
  }

  Image8 load_image(const std::string& relpath) const {
    return read_png(root / relpath);
  }

  std::vector<bank::FrameRecord> lap_frames(int lap_id) const {
    std::vector<bank::FrameRecord> out;
    for (const auto& f : frames) {
      if (f.lap_id == lap_id) out.push_back(f);
    }
    return out;
  }

  std::vector<int> lap_ids() const {
    std::vector<int> laps;
    for (const auto& f : frames) {
      bool seen = false;
      for (int l : laps) seen = seen || l == f.lap_id;
      if (!seen) laps.push_back(f.lap_id);
    }
    std::sort(laps.begin(), laps.end());
    return laps;
  }
};

namespace detail_io {

inline std::vector<std::string> list_pngs(const fs::path& dir,
                                          const std::string& relprefix) {
  std::vector<std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      out.push_back(relprefix + "/" + entry.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail_io

inline Dataset load_dataset(const fs::path& root) {
  Dataset ds;
  ds.root = root;
  const fs::path frames_csv = root / "frames.csv";
  const fs::path annotations_csv = root / "annotations.csv";
  if (!fs::exists(frames_csv)) {
    throw FormatError("missing manifest '" + frames_csv.string() + "'");
  }
  if (!fs::exists(annotations_csv)) {
    throw FormatError("missing manifest '" + annotations_csv.string() + "'");
  }

  {
    std::ifstream in(frames_csv);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      const auto sv = placedet::detail::strip_cr(line);
      if (sv.empty()) continue;
      if (header) {
        header = false;
        continue;
      }
      const auto fields = placedet::detail::split_csv(sv);
      if (fields.size() != 7) {
        throw FormatError("frames.csv: expected 7 fields, got " +
                          std::to_string(fields.size()) + " in '" + line + "'");
      }
      bank::FrameRecord f;
      f.frame_id = placedet::detail::parse_i64(fields[0], "frames.csv");
      f.lap_id = static_cast<int>(placedet::detail::parse_i64(fields[1], "frames.csv"));
      f.timestamp_us = placedet::detail::parse_i64(fields[2], "frames.csv");
      f.x_m = placedet::detail::parse_double(fields[3], "frames.csv");
      f.y_m = placedet::detail::parse_double(fields[4], "frames.csv");
      f.heading_rad = placedet::detail::parse_double(fields[5], "frames.csv");
      f.image_relpath = std::string(fields[6]);
      ds.frames.push_back(std::move(f));
      ds.annotations.emplace(ds.frames.back().frame_id,
                             std::vector<BoundingBox>{});
    }
  }

  // Referential and ordering integrity.
  for (std::size_t i = 1; i < ds.frames.size(); ++i) {
    const auto& prev = ds.frames[i - 1];
    const auto& cur = ds.frames[i];
    if (cur.frame_id <= prev.frame_id) {
      throw FormatError("frames.csv: frame ids not strictly increasing at frame " +
                        std::to_string(cur.frame_id));
    }
    if (cur.lap_id == prev.lap_id && cur.timestamp_us <= prev.timestamp_us) {
      throw FormatError("frames.csv: timestamps not increasing within lap at frame " +
                        std::to_string(cur.frame_id));
    }
  }
  for (const auto& f : ds.frames) {
    if (!fs::exists(root / f.image_relpath)) {
      throw FormatError("frame " + std::to_string(f.frame_id) +
                        ": missing image '" + f.image_relpath + "'");
    }
  }

  {
    std::ifstream in(annotations_csv);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      const auto sv = placedet::detail::strip_cr(line);
      if (sv.empty()) continue;
      if (header) {
        header = false;
        continue;
      }
      const auto fields = placedet::detail::split_csv(sv);
      if (fields.size() != 5) {
        throw FormatError("annotations.csv: expected 5 fields in '" + line + "'");
      }
      const std::int64_t frame_id =
          placedet::detail::parse_i64(fields[0], "annotations.csv");
      auto it = ds.annotations.find(frame_id);
      if (it == ds.annotations.end()) {
        throw FormatError("annotations.csv: annotation references frame " +
                          std::to_string(frame_id) + " absent from frames.csv");
      }
      BoundingBox b;
      b.x = placedet::detail::parse_double(fields[1], "annotations.csv");
      b.y = placedet::detail::parse_double(fields[2], "annotations.csv");
      b.w = placedet::detail::parse_double(fields[3], "annotations.csv");
      b.h = placedet::detail::parse_double(fields[4], "annotations.csv");
      if (!b.valid()) {
        throw FormatError("annotations.csv: degenerate box for frame " +
                          std::to_string(frame_id));
      }
      it->second.push_back(b);
    }
  }

  ds.positives = detail_io::list_pngs(root / "positives", "positives");
  ds.negative_images = detail_io::list_pngs(root / "negatives", "negatives");
  return ds;
}

// Writes manifests (and copies image files when targeting a new root).
// Numeric fields use shortest round-trip formatting, so saving a loaded
// dataset reproduces the manifest bytes.
inline void save_dataset(const Dataset& ds, const fs::path& root) {
  fs::create_directories(root);
  {
    std::string out = "frame_id,lap_id,timestamp_us,x_m,y_m,heading_rad,image_relpath\n";
    for (const auto& f : ds.frames) {
      out += placedet::detail::format_i64(f.frame_id);
      out += ',';
      out += placedet::detail::format_i64(f.lap_id);
      out += ',';
      out += placedet::detail::format_i64(f.timestamp_us);
      out += ',';
      out += placedet::detail::format_double(f.x_m);
      out += ',';
      out += placedet::detail::format_double(f.y_m);
      out += ',';
      out += placedet::detail::format_double(f.heading_rad);
      out += ',';
      out += f.image_relpath;
      out += '\n';
    }
    write_file_atomic(root / "frames.csv", out);
  }
  {
    std::string out = "frame_id,x,y,w,h\n";
    for (const auto& f : ds.frames) {
      const auto it = ds.annotations.find(f.frame_id);
      if (it == ds.annotations.end()) continue;
      for (const auto& b : it->second) {
        out += placedet::detail::format_i64(f.frame_id);
        out += ',';
        out += placedet::detail::format_double(b.x);
        out += ',';
        out += placedet::detail::format_double(b.y);
        out += ',';
        out += placedet::detail::format_double(b.w);
        out += ',';
        out += placedet::detail::format_double(b.h);
        out += '\n';
      }
    }
    write_file_atomic(root / "annotations.csv", out);
  }

  if (!fs::equivalent(fs::weakly_canonical(root),
                      fs::weakly_canonical(ds.root))) {
    auto copy_rel = [&](const std::string& rel) {
      const fs::path dst = root / rel;
      fs::create_directories(dst.parent_path());
      fs::copy_file(ds.root / rel, dst, fs::copy_options::overwrite_existing);
    };
    for (const auto& f : ds.frames) copy_rel(f.image_relpath);
    for (const auto& rel : ds.positives) copy_rel(rel);
    for (const auto& rel : ds.negative_images) copy_rel(rel);
  }
}

// ---------------------------------------------------------------------------
// Model files (JSON)

inline constexpr int kModelFormatVersion = 1;

inline json model_to_json(const svm::LinearModel& model,
                          const json& training_metadata = json::object()) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["window"] = {{"w", model.window.w}, {"h", model.window.h}};
  j["shrink"] = model.shrink;
  j["feature_dim"] = model.feature_dim;
  j["weights"] = model.weights;
  j["bias"] = model.bias;
  j["training_metadata"] = training_metadata;
  return j;
}

inline svm::LinearModel model_from_json(const json& j) {
  if (!j.contains("format_version") ||
      j["format_version"].get<int>() != kModelFormatVersion) {
    throw FormatError("model file: unsupported format_version");
  }
  svm::LinearModel m;
  m.window.w = j.at("window").at("w").get<int>();
  m.window.h = j.at("window").at("h").get<int>();
  m.shrink = j.at("shrink").get<int>();
  m.feature_dim = j.at("feature_dim").get<int>();
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  if (static_cast<int>(m.weights.size()) != m.feature_dim) {
    throw FormatError("model file: weight count does not match feature_dim");
  }
  return m;
}

inline void save_model(const svm::LinearModel& model, const fs::path& path,
                       const json& training_metadata = json::object()) {
  write_file_atomic(path, model_to_json(model, training_metadata).dump(2) + "\n");
}

inline svm::LinearModel load_model(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file_bytes(path));
  } catch (const json::exception& e) {
    throw FormatError("model file '" + path.string() + "': " + e.what());
  }
  return model_from_json(j);
}

// ---------------------------------------------------------------------------
// Bank container
//
// Byte layout (all integers little-endian):
//   bytes 0..7    magic "PLACBANK"
//   u32           format version (1)
//   u32           header JSON length Lh
//   u64           payload length Lp
//   u32           CRC-32 of the payload bytes
//   Lh bytes      header JSON: config, map frame manifest, entry index
//   Lp bytes      entry records, each:
//                   i64 frame_id
//                   u32 swathe length n, n * i64 swathe frame ids
//                   u32 iterations_run, u8 converged,
//                   u32 k, k * i32 new negatives per iteration,
//                   f64 final_objective, i32 final_training_errors
//                   u32 window_w, u32 window_h, u32 shrink, u32 feature_dim
//                   f64 bias, feature_dim * f64 weights
// Weights round-trip bit-exactly through the raw IEEE-754 encoding.

inline constexpr int kBankFormatVersion = 1;
inline constexpr char kBankMagic[8] = {'P', 'L', 'A', 'C', 'B', 'A', 'N', 'K'};

namespace detail_io {

struct ByteWriter {
  std::string bytes;
  void raw(const void* p, std::size_t n) {
    bytes.append(static_cast<const char*>(p), n);
  }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void i32(std::int32_t v) { raw(&v, 4); }
  void i64(std::int64_t v) { raw(&v, 8); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
};

struct ByteReader {
  const char* p;
  const char* end;
  explicit ByteReader(const std::string& s) : p(s.data()), end(s.data() + s.size()) {}
  void raw(void* out, std::size_t n) {
    if (static_cast<std::size_t>(end - p) < n) {
      throw FormatError("bank file: truncated payload");
    }
    std::memcpy(out, p, n);
    p += n;
  }
  std::uint8_t u8() { std::uint8_t v; raw(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; raw(&v, 4); return v; }
  std::int32_t i32() { std::int32_t v; raw(&v, 4); return v; }
  std::int64_t i64() { std::int64_t v; raw(&v, 8); return v; }
  std::uint64_t u64() { std::uint64_t v; raw(&v, 8); return v; }
  double f64() { double v; raw(&v, 8); return v; }
};

inline json hnm_config_to_json(const mining::HnmConfig& c) {
  return json{{"max_iterations", c.max_iterations},
              {"per_image_cap", c.per_image_cap},
              {"fp_iou_max", c.fp_iou_max},
              {"mining_score_min", c.mining_score_min},
              {"seed_patches_per_negative_image", c.seed_patches_per_negative_image},
              {"svm", {{"C", c.svm.C},
                       {"tolerance", c.svm.tolerance},
                       {"max_epochs", c.svm.max_epochs}}},
              {"detect", {{"window_w", c.detect.window.w},
                          {"window_h", c.detect.window.h},
                          {"stride_cells", c.detect.stride_cells},
                          {"score_threshold", c.detect.score_threshold},
                          {"nms_overlap", c.detect.nms_overlap}}},
              {"pyramid", {{"scales_per_octave", c.pyramid.scales_per_octave},
                           {"shrink", c.pyramid.shrink}}}};
}

inline mining::HnmConfig hnm_config_from_json(const json& j) {
  mining::HnmConfig c;
  c.max_iterations = j.at("max_iterations").get<int>();
  c.per_image_cap = j.at("per_image_cap").get<int>();
  c.fp_iou_max = j.at("fp_iou_max").get<double>();
  c.mining_score_min = j.at("mining_score_min").get<double>();
  c.seed_patches_per_negative_image =
      j.at("seed_patches_per_negative_image").get<int>();
  c.svm.C = j.at("svm").at("C").get<double>();
  c.svm.tolerance = j.at("svm").at("tolerance").get<double>();
  c.svm.max_epochs = j.at("svm").at("max_epochs").get<int>();
  c.detect.window.w = j.at("detect").at("window_w").get<int>();
  c.detect.window.h = j.at("detect").at("window_h").get<int>();
  c.detect.stride_cells = j.at("detect").at("stride_cells").get<int>();
  c.detect.score_threshold = j.at("detect").at("score_threshold").get<double>();
  c.detect.nms_overlap = j.at("detect").at("nms_overlap").get<double>();
  c.pyramid.scales_per_octave = j.at("pyramid").at("scales_per_octave").get<int>();
  c.pyramid.shrink = j.at("pyramid").at("shrink").get<int>();
  c.pyramid.min_window = c.detect.window;
  return c;
}

}  // namespace detail_io

inline void save_bank(const bank::ModelBank& b, const fs::path& path) {
  detail_io::ByteWriter payload;
  for (const auto& e : b.entries) {
    payload.i64(e.frame_id);
    payload.u32(static_cast<std::uint32_t>(e.swathe.size()));
    for (std::int64_t id : e.swathe) payload.i64(id);
    payload.u32(static_cast<std::uint32_t>(e.report.iterations_run));
    payload.u8(e.report.converged ? 1 : 0);
    payload.u32(static_cast<std::uint32_t>(e.report.new_negatives_per_iteration.size()));
    for (int v : e.report.new_negatives_per_iteration) payload.i32(v);
    payload.f64(e.report.final_objective);
    payload.i32(e.report.final_training_errors);
    payload.u32(static_cast<std::uint32_t>(e.model.window.w));
    payload.u32(static_cast<std::uint32_t>(e.model.window.h));
    payload.u32(static_cast<std::uint32_t>(e.model.shrink));
    payload.u32(static_cast<std::uint32_t>(e.model.feature_dim));
    payload.f64(e.model.bias);
    for (double w : e.model.weights) payload.f64(w);
  }

  json header;
  header["format_version"] = kBankFormatVersion;
  header["config"] = {{"N", b.config.N},
                      {"method", bank::swathe_method_name(b.config.method)},
                      {"hnm", detail_io::hnm_config_to_json(b.config.hnm)}};
  json frames = json::array();
  for (const auto& f : b.map_frames) {
    frames.push_back({{"frame_id", f.frame_id},
                      {"lap_id", f.lap_id},
                      {"timestamp_us", f.timestamp_us},
                      {"x_m", f.x_m},
                      {"y_m", f.y_m},
                      {"heading_rad", f.heading_rad},
                      {"image_relpath", f.image_relpath}});
  }
  header["map_frames"] = std::move(frames);
  header["n_entries"] = static_cast<int>(b.entries.size());
  const std::string header_bytes = header.dump();

  detail_io::ByteWriter out;
  out.raw(kBankMagic, sizeof(kBankMagic));
  out.u32(kBankFormatVersion);
  out.u32(static_cast<std::uint32_t>(header_bytes.size()));
  out.u64(payload.bytes.size());
  out.u32(placedet::detail::crc32(payload.bytes.data(), payload.bytes.size()));
  out.bytes += header_bytes;
  out.bytes += payload.bytes;
  write_file_atomic(path, out.bytes);
}

// ---------------------------------------------------------------------------
// Similarity matrix container: magic, version, metric, frame count, row-major
// doubles, CRC-32 of the value bytes.

inline constexpr char kSimMagic[8] = {'P', 'D', 'S', 'I', 'M', 'M', 'A', 'T'};

inline void save_similarity(const similarity::SimilarityMatrix& m,
                            const fs::path& path) {
  detail_io::ByteWriter out;
  out.raw(kSimMagic, sizeof(kSimMagic));
  out.u32(1);
  out.u8(m.metric == similarity::Metric::gist_l2 ? 0 : 1);
  out.u32(static_cast<std::uint32_t>(m.n));
  const std::size_t bytes = m.distances.size() * sizeof(double);
  out.u32(placedet::detail::crc32(m.distances.data(), bytes));
  out.raw(m.distances.data(), bytes);
  write_file_atomic(path, out.bytes);
}

inline similarity::SimilarityMatrix load_similarity(const fs::path& path) {
  const std::string bytes = read_file_bytes(path);
  detail_io::ByteReader r(bytes);
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kSimMagic, 8) != 0) {
    throw FormatError("similarity file '" + path.string() + "': bad magic");
  }
  if (r.u32() != 1) {
    throw FormatError("similarity file '" + path.string() +
                      "': unsupported format_version");
  }
  similarity::SimilarityMatrix m;
  m.metric = r.u8() == 0 ? similarity::Metric::gist_l2
                         : similarity::Metric::mutual_information;
  m.n = static_cast<int>(r.u32());
  const std::uint32_t crc_expected = r.u32();
  m.distances.resize(static_cast<std::size_t>(m.n) * m.n);
  r.raw(m.distances.data(), m.distances.size() * sizeof(double));
  if (placedet::detail::crc32(m.distances.data(),
                              m.distances.size() * sizeof(double)) !=
      crc_expected) {
    throw FormatError("similarity file '" + path.string() +
                      "': checksum mismatch");
  }
  return m;
}

inline void export_similarity_csv(const similarity::SimilarityMatrix& m,
                                  const fs::path& path) {
  std::string out;
  for (int i = 0; i < m.n; ++i) {
    for (int j = 0; j < m.n; ++j) {
      if (j > 0) out += ',';
      out += placedet::detail::format_double(m.at(i, j));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

inline bank::ModelBank load_bank(const fs::path& path) {
  const std::string bytes = read_file_bytes(path);
  detail_io::ByteReader r(bytes);
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kBankMagic, 8) != 0) {
    throw FormatError("bank file '" + path.string() + "': bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kBankFormatVersion) {
    throw FormatError("bank file '" + path.string() + "': unsupported format_version " +
                      std::to_string(version));
  }
  const std::uint32_t header_len = r.u32();
  const std::uint64_t payload_len = r.u64();
  const std::uint32_t crc_expected = r.u32();
  if (static_cast<std::uint64_t>(r.end - r.p) != header_len + payload_len) {
    throw FormatError("bank file '" + path.string() + "': size mismatch");
  }
  json header;
  try {
    header = json::parse(std::string(r.p, r.p + header_len));
  } catch (const json::exception& e) {
    throw FormatError("bank file '" + path.string() + "': bad header: " + e.what());
  }
  r.p += header_len;
  const std::uint32_t crc_actual =
      placedet::detail::crc32(r.p, static_cast<std::size_t>(payload_len));
  if (crc_actual != crc_expected) {
    throw FormatError("bank file '" + path.string() + "': payload checksum mismatch");
  }

  bank::ModelBank b;
  b.config.N = header.at("config").at("N").get<int>();
  b.config.method =
      bank::swathe_method_from_name(header.at("config").at("method").get<std::string>());
  b.config.hnm = detail_io::hnm_config_from_json(header.at("config").at("hnm"));
  for (const auto& fj : header.at("map_frames")) {
    bank::FrameRecord f;
    f.frame_id = fj.at("frame_id").get<std::int64_t>();
    f.lap_id = fj.at("lap_id").get<int>();
    f.timestamp_us = fj.at("timestamp_us").get<std::int64_t>();
    f.x_m = fj.at("x_m").get<double>();
    f.y_m = fj.at("y_m").get<double>();
    f.heading_rad = fj.at("heading_rad").get<double>();
    f.image_relpath = fj.at("image_relpath").get<std::string>();
    b.map_frames.push_back(std::move(f));
  }

  const int n_entries = header.at("n_entries").get<int>();
  for (int i = 0; i < n_entries; ++i) {
    bank::BankEntry e;
    e.frame_id = r.i64();
    const std::uint32_t sn = r.u32();
    e.swathe.resize(sn);
    for (std::uint32_t k = 0; k < sn; ++k) e.swathe[k] = r.i64();
    e.report.iterations_run = static_cast<int>(r.u32());
    e.report.converged = r.u8() != 0;
    const std::uint32_t kn = r.u32();
    e.report.new_negatives_per_iteration.resize(kn);
    for (std::uint32_t k = 0; k < kn; ++k) {
      e.report.new_negatives_per_iteration[k] = r.i32();
    }
    e.report.final_objective = r.f64();
    e.report.final_training_errors = r.i32();
    e.model.window.w = static_cast<int>(r.u32());
    e.model.window.h = static_cast<int>(r.u32());
    e.model.shrink = static_cast<int>(r.u32());
    e.model.feature_dim = static_cast<int>(r.u32());
    e.model.bias = r.f64();
    e.model.weights.resize(e.model.feature_dim);
    for (int k = 0; k < e.model.feature_dim; ++k) e.model.weights[k] = r.f64();
    b.entries.push_back(std::move(e));
  }
  if (b.entries.size() != b.map_frames.size()) {
    throw FormatError("bank file '" + path.string() + "': entry/frame count mismatch");
  }
  return b;
}

}  // namespace placedet::dataio
