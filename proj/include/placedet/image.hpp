#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "placedet/errors.hpp"

namespace placedet {

struct WindowSize {
  int w = 0;
  int h = 0;
  friend bool operator==(const WindowSize&, const WindowSize&) = default;
};

// 8-bit interleaved RGB raster. The whole pipeline works on these; file
// decode/encode lives in dataio.
struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // size = width * height * 3

  Image8() = default;
  Image8(int w, int h) : width(w), height(h), pixels(3u * w * h, 0) {}

  static Image8 filled(int w, int h, std::uint8_t r, std::uint8_t g,
                       std::uint8_t b) {
    Image8 img(w, h);
    for (int i = 0; i < w * h; ++i) {
      img.pixels[3 * i + 0] = r;
      img.pixels[3 * i + 1] = g;
      img.pixels[3 * i + 2] = b;
    }
    return img;
  }

  static Image8 gray(int w, int h, std::uint8_t v) {
    return filled(w, h, v, v, v);
  }

  std::uint8_t at(int x, int y, int c) const {
    return pixels[3 * (static_cast<std::size_t>(y) * width + x) + c];
  }
  std::uint8_t& at(int x, int y, int c) {
    return pixels[3 * (static_cast<std::size_t>(y) * width + x) + c];
  }

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = &pixels[3 * (static_cast<std::size_t>(y) * width + x)];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }

  bool empty() const { return width == 0 || height == 0; }
};

// Mean-of-channels intensity in [0, 255]. Gradient features and the image
// similarity metrics all run on this.
inline std::vector<float> to_intensity(const Image8& img) {
  std::vector<float> out(static_cast<std::size_t>(img.width) * img.height);
  const std::uint8_t* p = img.pixels.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (static_cast<float>(p[3 * i]) + static_cast<float>(p[3 * i + 1]) +
              static_cast<float>(p[3 * i + 2])) /
             3.0f;
  }
  return out;
}

namespace detail {

// Sample position convention: dst pixel centers map to src pixel centers,
// coordinates clamped at the borders.
inline double src_coord(int dst, int dst_size, int src_size) {
  const double scale = static_cast<double>(src_size) / dst_size;
  return (dst + 0.5) * scale - 0.5;
}

}  // namespace detail

inline Image8 resize_bilinear(const Image8& src, int new_w, int new_h) {
  if (src.empty() || new_w < 1 || new_h < 1) {
    throw InvalidInputError("resize_bilinear: empty image or bad target size");
  }
  if (new_w == src.width && new_h == src.height) return src;
  Image8 dst(new_w, new_h);
  for (int y = 0; y < new_h; ++y) {
    const double sy = detail::src_coord(y, new_h, src.height);
    const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, src.height - 1);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double fy = std::clamp(sy - y0, 0.0, 1.0);
    for (int x = 0; x < new_w; ++x) {
      const double sx = detail::src_coord(x, new_w, src.width);
      const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, src.width - 1);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double fx = std::clamp(sx - x0, 0.0, 1.0);
      for (int c = 0; c < 3; ++c) {
        const double v00 = src.at(x0, y0, c);
        const double v10 = src.at(x1, y0, c);
        const double v01 = src.at(x0, y1, c);
        const double v11 = src.at(x1, y1, c);
        const double v = (1 - fy) * ((1 - fx) * v00 + fx * v10) +
                         fy * ((1 - fx) * v01 + fx * v11);
        dst.at(x, y, c) = static_cast<std::uint8_t>(
            std::clamp(static_cast<int>(std::lround(v)), 0, 255));
      }
    }
  }
  return dst;
}

inline std::vector<float> resize_bilinear_gray(const std::vector<float>& src,
                                               int src_w, int src_h, int new_w,
                                               int new_h) {
  if (src_w < 1 || src_h < 1 || new_w < 1 || new_h < 1) {
    throw InvalidInputError("resize_bilinear_gray: bad dimensions");
  }
  std::vector<float> dst(static_cast<std::size_t>(new_w) * new_h);
  for (int y = 0; y < new_h; ++y) {
    const double sy = detail::src_coord(y, new_h, src_h);
    const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, src_h - 1);
    const int y1 = std::min(y0 + 1, src_h - 1);
    const double fy = std::clamp(sy - y0, 0.0, 1.0);
    for (int x = 0; x < new_w; ++x) {
      const double sx = detail::src_coord(x, new_w, src_w);
      const int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, src_w - 1);
      const int x1 = std::min(x0 + 1, src_w - 1);
      const double fx = std::clamp(sx - x0, 0.0, 1.0);
      const double v =
          (1 - fy) * ((1 - fx) * src[static_cast<std::size_t>(y0) * src_w + x0] +
                      fx * src[static_cast<std::size_t>(y0) * src_w + x1]) +
          fy * ((1 - fx) * src[static_cast<std::size_t>(y1) * src_w + x0] +
                fx * src[static_cast<std::size_t>(y1) * src_w + x1]);
      dst[static_cast<std::size_t>(y) * new_w + x] = static_cast<float>(v);
    }
  }
  return dst;
}

}  // namespace placedet
