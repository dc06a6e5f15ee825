#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "slikit/image.hpp"
#include "slikit/parallel.hpp"

namespace slikit {

// Compressive loop-closure detection: phase images are projected through a
// seeded Gaussian random matrix into short signatures and revisits are found
// by squared distance in the compressed domain.

struct CompressorConfig {
  int m_rows = 100;          // compressed signal length n
  std::uint64_t seed = 1;
  double row_scale = 0.0;    // 0 means the default 1/sqrt(n)

  double scale() const { return row_scale > 0.0 ? row_scale : 1.0 / std::sqrt(static_cast<double>(m_rows)); }
  void validate(std::size_t image_pixels) const {
    if (m_rows <= 0 || static_cast<std::size_t>(m_rows) >= image_pixels) {
      throw std::invalid_argument("compressed length must satisfy 0 < n << width*height");
    }
  }
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Entry (row, col) of the unit-variance Gaussian matrix for a seed. The
// matrix is a pure function of (seed, row, col) -- counter-based, never
// materialized -- so streaming whole rows and random sparse access see the
// same values. Two mixed uniforms feed one Box-Muller cosine draw.
inline double gaussian_matrix_entry(std::uint64_t seed, std::uint64_t row, std::uint64_t col) {
  const std::uint64_t base =
      detail::mix64(detail::mix64(seed + 0x9E3779B97F4A7C15ull) ^ (row * 0xD6E8FEB86659FD93ull)) ^
      (col * 0xCA01F9DD51D3C6E9ull);
  const std::uint64_t a = detail::mix64(base);
  const std::uint64_t b = detail::mix64(base + 0x9E3779B97F4A7C15ull);
  double u1 = static_cast<double>(a >> 11) * 0x1.0p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

// y = C * flatten(phase), invalid pixels contributing zero. Rows accumulate
// in pixel order, so the result is independent of the thread count.
inline std::vector<double> compress(const PhaseImage& phase, const CompressorConfig& cfg) {
  const std::size_t n_pixels = static_cast<std::size_t>(phase.width) * phase.height;
  cfg.validate(n_pixels);
  const double scale = cfg.scale();
  std::vector<double> y(cfg.m_rows, 0.0);
  parallel_chunks(0, static_cast<std::size_t>(cfg.m_rows), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n_pixels; ++k) {
        if (!phase.valid[k]) continue;
        acc += gaussian_matrix_entry(cfg.seed, r, k) * phase.phase[k];
      }
      y[r] = acc * scale;
    }
  }, 1);
  return y;
}

// Squared Euclidean distance between two compressed signatures.
inline double distance(const std::vector<double>& y1, const std::vector<double>& y2) {
  if (y1.size() != y2.size()) throw std::invalid_argument("compressed signal lengths differ");
  double d = 0.0;
  for (std::size_t i = 0; i < y1.size(); ++i) {
    const double diff = y2[i] - y1[i];
    d += diff * diff;
  }
  return d;
}

struct LoopCandidate {
  int frame_a = 0;  // earlier frame
  int frame_b = 0;  // current frame
  double distance = 0.0;
  bool accepted = false;
};

struct LoopConfig {
  CompressorConfig compressor;
  double tau_absolute = -1.0;        // fixed threshold when >= 0
  double tau_adaptive_factor = 0.3;  // else tau = factor * median(all prior pair distances)
  int min_gap = 5;
};

// Threshold for the current session: fixed when configured, otherwise a
// fraction of the median distance over all prior signature pairs.
inline std::optional<double> loop_threshold(const std::vector<std::vector<double>>& history,
                                            const LoopConfig& cfg) {
  if (cfg.tau_absolute >= 0.0) return cfg.tau_absolute;
  if (history.size() < 2) return std::nullopt;
  std::vector<double> d;
  d.reserve(history.size() * (history.size() - 1) / 2);
  for (std::size_t i = 0; i < history.size(); ++i) {
    for (std::size_t j = i + 1; j < history.size(); ++j) {
      d.push_back(distance(history[i], history[j]));
    }
  }
  std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
  return cfg.tau_adaptive_factor * d[d.size() / 2];
}

// Checks the current signature (frame index = history.size()) against all
// frames at least min_gap back; reports the closest one when it clears the
// threshold.
inline std::optional<LoopCandidate> detect(const std::vector<std::vector<double>>& history,
                                           const std::vector<double>& current,
                                           const LoopConfig& cfg) {
  if (history.empty()) throw std::invalid_argument("loop detection needs a nonempty history");
  const int current_index = static_cast<int>(history.size());
  const auto tau = loop_threshold(history, cfg);
  if (!tau) return std::nullopt;
  int best = -1;
  double best_d = 0.0;
  for (int j = 0; j + cfg.min_gap <= current_index; ++j) {
    const double d = distance(history[j], current);
    if (best < 0 || d < best_d) {
      best = j;
      best_d = d;
    }
  }
  if (best < 0 || best_d >= *tau) return std::nullopt;
  LoopCandidate c;
  c.frame_a = best;
  c.frame_b = current_index;
  c.distance = best_d;
  c.accepted = true;
  return c;
}

// --- Haar sparsity diagnostic ------------------------------------------------

namespace detail {

inline int next_pow2(int v) {
  int p = 1;
  while (p < v) p <<= 1;
  return p;
}

// One orthonormal analysis level on the leading m x m block.
inline void haar_level(std::vector<double>& a, int stride, int m) {
  const double inv_sqrt2 = 0.70710678118654752440;
  std::vector<double> tmp(m);
  for (int r = 0; r < m; ++r) {
    double* row = a.data() + static_cast<std::size_t>(r) * stride;
    for (int c = 0; c < m / 2; ++c) {
      tmp[c] = (row[2 * c] + row[2 * c + 1]) * inv_sqrt2;
      tmp[m / 2 + c] = (row[2 * c] - row[2 * c + 1]) * inv_sqrt2;
    }
    std::copy(tmp.begin(), tmp.begin() + m, row);
  }
  for (int c = 0; c < m; ++c) {
    for (int r = 0; r < m / 2; ++r) {
      const double lo = (a[static_cast<std::size_t>(2 * r) * stride + c] +
                         a[static_cast<std::size_t>(2 * r + 1) * stride + c]) * inv_sqrt2;
      const double hi = (a[static_cast<std::size_t>(2 * r) * stride + c] -
                         a[static_cast<std::size_t>(2 * r + 1) * stride + c]) * inv_sqrt2;
      tmp[r] = lo;
      tmp[m / 2 + r] = hi;
    }
    for (int r = 0; r < m; ++r) a[static_cast<std::size_t>(r) * stride + c] = tmp[r];
  }
}

inline void haar_level_inverse(std::vector<double>& a, int stride, int m) {
  const double inv_sqrt2 = 0.70710678118654752440;
  std::vector<double> tmp(m);
  for (int c = 0; c < m; ++c) {
    for (int r = 0; r < m / 2; ++r) {
      const double lo = a[static_cast<std::size_t>(r) * stride + c];
      const double hi = a[static_cast<std::size_t>(m / 2 + r) * stride + c];
      tmp[2 * r] = (lo + hi) * inv_sqrt2;
      tmp[2 * r + 1] = (lo - hi) * inv_sqrt2;
    }
    for (int r = 0; r < m; ++r) a[static_cast<std::size_t>(r) * stride + c] = tmp[r];
  }
  for (int r = 0; r < m; ++r) {
    double* row = a.data() + static_cast<std::size_t>(r) * stride;
    for (int c = 0; c < m / 2; ++c) {
      tmp[2 * c] = (row[c] + row[m / 2 + c]) * inv_sqrt2;
      tmp[2 * c + 1] = (row[c] - row[m / 2 + c]) * inv_sqrt2;
    }
    std::copy(tmp.begin(), tmp.begin() + m, row);
  }
}

}  // namespace detail

// Full multilevel orthonormal 2D Haar transform of a zero-padded square
// copy; returns the coefficient array and its side length.
inline std::pair<std::vector<double>, int> haar_transform_2d(const std::vector<double>& values,
                                                             int width, int height) {
  const int side = detail::next_pow2(std::max(width, height));
  std::vector<double> a(static_cast<std::size_t>(side) * side, 0.0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      a[static_cast<std::size_t>(r) * side + c] = values[static_cast<std::size_t>(r) * width + c];
    }
  }
  for (int m = side; m > 1; m /= 2) detail::haar_level(a, side, m);
  return {std::move(a), side};
}

inline void haar_inverse_2d(std::vector<double>& coeffs, int side) {
  for (int m = 2; m <= side; m *= 2) detail::haar_level_inverse(coeffs, side, m);
}

inline double sparsity_report(const std::vector<double>& values, int width, int height) {
  const auto [coeffs, side] = haar_transform_2d(values, width, height);
  (void)side;
  double l1 = 0.0;
  for (double c : coeffs) l1 += std::abs(c);
  return l1;
}

inline double sparsity_report(const PhaseImage& img) {
  std::vector<double> v(img.phase.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = img.valid[i] ? img.phase[i] : 0.0;
  return sparsity_report(v, img.width, img.height);
}

inline double sparsity_report(const RawImage& img) {
  return sparsity_report(img.intensity, img.width, img.height);
}

}  // namespace slikit
