#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "placedet/detail/fft.hpp"
#include "placedet/detail/parallel.hpp"
#include "placedet/errors.hpp"
#include "placedet/image.hpp"

namespace placedet::similarity {

struct GistConfig {
  int scales = 4;
  int orientations = 8;
  int grid = 4;
  int working_size = 128;  // power of two
};

// Whole-image descriptor: oriented band-pass (log-Gabor style) filter
// energies averaged over a grid of cells, concatenated in
// (scale, orientation, row, col) order.
struct GistDescriptor {
  std::vector<float> values;
};

namespace detail_gist {

// One filter's transfer function over the frequency plane. Filters are
// single-sided (support on half the plane), so the inverse transform is
// the complex analytic response and |.| gives a smooth envelope.
inline std::vector<double> make_transfer(const GistConfig& cfg, int scale,
                                         int orientation) {
  const int n = cfg.working_size;
  std::vector<double> g(static_cast<std::size_t>(n) * n, 0.0);
  const double f_center = 0.32 / std::exp2(static_cast<double>(scale));
  const double sigma_oct = 0.55;
  const double theta0 = 3.14159265358979323846 * orientation / cfg.orientations;
  const double sigma_theta = 0.9 * 3.14159265358979323846 / cfg.orientations;
  for (int ky = 0; ky < n; ++ky) {
    const double fy = (ky < n / 2 ? ky : ky - n) / static_cast<double>(n);
    for (int kx = 0; kx < n; ++kx) {
      const double fx = (kx < n / 2 ? kx : kx - n) / static_cast<double>(n);
      const double r = std::hypot(fx, fy);
      if (r <= 0.0) continue;  // zero DC response
      double dtheta = std::atan2(fy, fx) - theta0;
      while (dtheta > 3.14159265358979323846) dtheta -= 2 * 3.14159265358979323846;
      while (dtheta < -3.14159265358979323846) dtheta += 2 * 3.14159265358979323846;
      // Single-sided: keep only the lobe around theta0.
      if (std::abs(dtheta) > 3.14159265358979323846 / 2) continue;
      const double radial = std::log2(r / f_center);
      const double v = std::exp(-radial * radial / (2 * sigma_oct * sigma_oct)) *
                       std::exp(-dtheta * dtheta / (2 * sigma_theta * sigma_theta));
      g[static_cast<std::size_t>(ky) * n + kx] = v;
    }
  }
  return g;
}

struct FilterBank {
  GistConfig config;
  std::vector<std::vector<double>> transfers;  // scale-major, then orientation
};

inline FilterBank make_filter_bank(const GistConfig& cfg) {
  FilterBank bank;
  bank.config = cfg;
  bank.transfers.reserve(static_cast<std::size_t>(cfg.scales) * cfg.orientations);
  for (int s = 0; s < cfg.scales; ++s) {
    for (int o = 0; o < cfg.orientations; ++o) {
      bank.transfers.push_back(make_transfer(cfg, s, o));
    }
  }
  return bank;
}

}  // namespace detail_gist

inline GistDescriptor gist_descriptor(const Image8& img,
                                      const GistConfig& cfg = {}) {
  if (img.empty()) throw InvalidInputError("gist_descriptor: empty image");
  if (!placedet::detail::is_power_of_two(cfg.working_size)) {
    throw InvalidInputError("gist_descriptor: working_size must be a power of two");
  }
  if (cfg.grid < 1 || cfg.working_size % cfg.grid != 0) {
    throw InvalidInputError("gist_descriptor: grid must divide working_size");
  }

  const int n = cfg.working_size;
  std::vector<float> gray = to_intensity(img);
  gray = resize_bilinear_gray(gray, img.width, img.height, n, n);

  std::vector<std::complex<double>> freq(static_cast<std::size_t>(n) * n);
  for (std::size_t i = 0; i < freq.size(); ++i) {
    freq[i] = std::complex<double>(gray[i] / 255.0, 0.0);
  }
  placedet::detail::fft2_inplace(freq, n, n, false);

  static thread_local struct {
    GistConfig config;
    detail_gist::FilterBank bank;
    bool valid = false;
  } cache;
  if (!cache.valid || cache.config.scales != cfg.scales ||
      cache.config.orientations != cfg.orientations ||
      cache.config.working_size != cfg.working_size) {
    cache.bank = detail_gist::make_filter_bank(cfg);
    cache.config = cfg;
    cache.valid = true;
  }

  GistDescriptor desc;
  desc.values.assign(static_cast<std::size_t>(cfg.scales) * cfg.orientations *
                         cfg.grid * cfg.grid,
                     0.0f);
  const int cell = n / cfg.grid;
  std::vector<std::complex<double>> resp(freq.size());
  std::size_t out = 0;
  for (int s = 0; s < cfg.scales; ++s) {
    for (int o = 0; o < cfg.orientations; ++o) {
      const auto& g = cache.bank.transfers[static_cast<std::size_t>(s) *
                                               cfg.orientations +
                                           o];
      for (std::size_t i = 0; i < freq.size(); ++i) resp[i] = freq[i] * g[i];
      placedet::detail::fft2_inplace(resp, n, n, true);
      for (int gr = 0; gr < cfg.grid; ++gr) {
        for (int gc = 0; gc < cfg.grid; ++gc) {
          double acc = 0.0;
          for (int y = gr * cell; y < (gr + 1) * cell; ++y) {
            for (int x = gc * cell; x < (gc + 1) * cell; ++x) {
              acc += std::abs(resp[static_cast<std::size_t>(y) * n + x]);
            }
          }
          desc.values[out++] = static_cast<float>(acc / (cell * cell));
        }
      }
    }
  }
  return desc;
}

inline double gist_distance(const GistDescriptor& a, const GistDescriptor& b) {
  if (a.values.size() != b.values.size()) {
    throw DimensionError("gist_distance: descriptor dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = static_cast<double>(a.values[i]) - b.values[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

struct MiConfig {
  int bins = 32;
  int working_size = 128;
};

namespace detail_mi {

inline std::vector<int> quantize(const Image8& img, const MiConfig& cfg) {
  std::vector<float> gray = to_intensity(img);
  gray = resize_bilinear_gray(gray, img.width, img.height, cfg.working_size,
                              cfg.working_size);
  std::vector<int> q(gray.size());
  for (std::size_t i = 0; i < gray.size(); ++i) {
    int b = static_cast<int>(gray[i] * cfg.bins / 256.0f);
    q[i] = std::clamp(b, 0, cfg.bins - 1);
  }
  return q;
}

// Plug-in MI (bits) from quantized co-located pixels; 0 log 0 = 0.
inline double mutual_information_quantized(const std::vector<int>& qa,
                                           const std::vector<int>& qb,
                                           int bins) {
  std::vector<double> joint(static_cast<std::size_t>(bins) * bins, 0.0);
  std::vector<double> pa(bins, 0.0), pb(bins, 0.0);
  const double inv_n = 1.0 / static_cast<double>(qa.size());
  for (std::size_t i = 0; i < qa.size(); ++i) {
    joint[static_cast<std::size_t>(qa[i]) * bins + qb[i]] += inv_n;
  }
  for (int a = 0; a < bins; ++a) {
    for (int b = 0; b < bins; ++b) {
      pa[a] += joint[static_cast<std::size_t>(a) * bins + b];
      pb[b] += joint[static_cast<std::size_t>(a) * bins + b];
    }
  }
  double mi = 0.0;
  constexpr double inv_log2 = 1.4426950408889634;  // 1/ln(2)
  for (int a = 0; a < bins; ++a) {
    for (int b = 0; b < bins; ++b) {
      const double p = joint[static_cast<std::size_t>(a) * bins + b];
      if (p > 0.0) mi += p * std::log(p / (pa[a] * pb[b])) * inv_log2;
    }
  }
  return mi;
}

}  // namespace detail_mi

// Mutual information in bits between the two intensity images, both
// resized to working_size x working_size and quantized into equal-width
// bins over [0, 255].
inline double mutual_information(const Image8& a, const Image8& b,
                                 const MiConfig& cfg = {}) {
  if (a.empty() || b.empty()) {
    throw InvalidInputError("mutual_information: empty image");
  }
  if (cfg.bins < 2) throw InvalidInputError("mutual_information: bins must be >= 2");
  const auto qa = detail_mi::quantize(a, cfg);
  const auto qb = detail_mi::quantize(b, cfg);
  return detail_mi::mutual_information_quantized(qa, qb, cfg.bins);
}

enum class Metric { gist_l2, mutual_information };

inline std::string metric_name(Metric m) {
  return m == Metric::gist_l2 ? "gist_l2" : "mutual_information";
}

// All-pairs distance matrix. GIST uses the descriptor l2 norm; mutual
// information is negated so that smaller always means more similar.
struct SimilarityMatrix {
  Metric metric = Metric::gist_l2;
  int n = 0;
  std::vector<double> distances;  // n x n, symmetric

  double at(int i, int j) const {
    return distances[static_cast<std::size_t>(i) * n + j];
  }
  double& at(int i, int j) {
    return distances[static_cast<std::size_t>(i) * n + j];
  }
};

struct SimilarityConfig {
  GistConfig gist;
  MiConfig mi;
  int jobs = 0;  // 0 = hardware default
};

template <typename ImageProvider>
SimilarityMatrix similarity_matrix(int n_frames, Metric metric,
                                   const ImageProvider& image_at,
                                   const SimilarityConfig& cfg = {}) {
  if (n_frames < 1) throw InvalidInputError("similarity_matrix: need >= 1 frame");
  SimilarityMatrix m;
  m.metric = metric;
  m.n = n_frames;
  m.distances.assign(static_cast<std::size_t>(n_frames) * n_frames, 0.0);
  const int jobs = cfg.jobs > 0 ? cfg.jobs : placedet::detail::default_jobs();

  if (metric == Metric::gist_l2) {
    std::vector<GistDescriptor> descs(n_frames);
    placedet::detail::parallel_for(n_frames, jobs, [&](std::size_t i) {
      descs[i] = gist_descriptor(image_at(static_cast<int>(i)), cfg.gist);
    });
    placedet::detail::parallel_for(n_frames, jobs, [&](std::size_t i) {
      for (std::size_t j = i + 1; j < static_cast<std::size_t>(n_frames); ++j) {
        const double d = gist_distance(descs[i], descs[j]);
        m.distances[i * n_frames + j] = d;
        m.distances[j * n_frames + i] = d;
      }
    });
  } else {
    std::vector<std::vector<int>> quant(n_frames);
    placedet::detail::parallel_for(n_frames, jobs, [&](std::size_t i) {
      quant[i] = detail_mi::quantize(image_at(static_cast<int>(i)), cfg.mi);
    });
    placedet::detail::parallel_for(n_frames, jobs, [&](std::size_t i) {
      for (std::size_t j = i; j < static_cast<std::size_t>(n_frames); ++j) {
        const double d = -detail_mi::mutual_information_quantized(
            quant[i], quant[j], cfg.mi.bins);
        m.distances[i * n_frames + j] = d;
        m.distances[j * n_frames + i] = d;
      }
    });
  }
  return m;
}

}  // namespace placedet::similarity
