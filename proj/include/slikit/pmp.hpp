#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "slikit/cloud.hpp"
#include "slikit/image.hpp"
#include "slikit/rig.hpp"

namespace slikit {

// Phase-shifted sinusoid coding: N patterns, background brightness A,
// modulation B, all intensities in [0, 1].
struct PmpConfig {
  int n_patterns = 4;
  double brightness_a = 0.5;
  double modulation_b = 0.4;

  void validate() const {
    if (n_patterns < 3) throw std::invalid_argument("PMP needs at least 3 patterns");
    if (modulation_b <= 0.0 || brightness_a + modulation_b > 1.0 ||
        brightness_a - modulation_b < 0.0) {
      throw std::invalid_argument("PMP brightness/modulation leave [0,1]");
    }
  }
};

// Pattern phase at projector row nu_p: one full period over the pattern height.
inline double pattern_phase(double nu_p, int proj_height) {
  return kTwoPi * nu_p / proj_height;
}

// Intensity of pattern n (1-based) for a surface point whose pattern phase is
// phi: A + B*cos(phi - 2*pi*n/N).
inline double pattern_intensity(double phi, int n, const PmpConfig& cfg) {
  return cfg.brightness_a +
         cfg.modulation_b * std::cos(phi - kTwoPi * n / cfg.n_patterns);
}

// The N projector-plane patterns. Every row is constant along the column
// axis; the column phase ramps linearly from 0 to 2*pi over proj_height.
inline std::vector<RawImage> generate_patterns(const PmpConfig& cfg, const SensorRig& rig) {
  cfg.validate();
  std::vector<RawImage> out;
  out.reserve(cfg.n_patterns);
  for (int n = 1; n <= cfg.n_patterns; ++n) {
    RawImage img(rig.proj_width, rig.proj_height);
    for (int r = 0; r < rig.proj_height; ++r) {
      const double v = pattern_intensity(pattern_phase(r, rig.proj_height), n, cfg);
      for (int c = 0; c < rig.proj_width; ++c) img.set(r, c, v);
    }
    out.push_back(std::move(img));
  }
  return out;
}

// Per-pixel arctangent decode. Pixels whose estimated modulation falls below
// min_modulation (shadow, background, saturation) are masked invalid.
inline PhaseImage decode_phase(const std::vector<RawImage>& images, const PmpConfig& cfg,
                               double min_modulation = 0.02) {
  if (static_cast<int>(images.size()) != cfg.n_patterns || cfg.n_patterns < 3) {
    throw std::invalid_argument("decode_phase: need exactly N >= 3 images");
  }
  const int w = images[0].width;
  const int h = images[0].height;
  for (const auto& img : images) {
    if (img.width != w || img.height != h) {
      throw std::invalid_argument("decode_phase: image dimensions differ");
    }
  }
  const int n_pat = cfg.n_patterns;
  std::vector<double> sin_n(n_pat), cos_n(n_pat);
  for (int n = 1; n <= n_pat; ++n) {
    sin_n[n - 1] = std::sin(kTwoPi * n / n_pat);
    cos_n[n - 1] = std::cos(kTwoPi * n / n_pat);
  }
  PhaseImage out(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double s = 0.0, co = 0.0;
      for (int n = 0; n < n_pat; ++n) {
        const double i_n = images[n].at(r, c);
        s += i_n * sin_n[n];
        co += i_n * cos_n[n];
      }
      const double modulation = 2.0 / n_pat * std::sqrt(s * s + co * co);
      if (modulation < min_modulation) {
        out.set_invalid(r, c);
      } else {
        out.set(r, c, wrap_phase(std::atan2(s, co)));
      }
    }
  }
  return out;
}

struct TriangulationReport {
  std::size_t produced = 0;
  std::size_t skipped_degenerate = 0;
  std::size_t skipped_behind = 0;
};

// Intersects each valid camera ray with the projector row-plane its phase
// selects: all points X in the device frame with proj_fy * X.y / X.z +
// proj_cy = phi * proj_height / (2*pi). The plane passes through the
// projector center, so it is y - q*z = 0 with q the normalized ordinate.
inline PointCloud triangulate(const PhaseImage& phase, const SensorRig& rig,
                              TriangulationReport* report = nullptr) {
  const Vec3 origin = rig.camera_center_in_device();
  const Mat3 r_pc = rig.extrinsic_rotation.transpose();
  TriangulationReport stats;
  PointCloud cloud;
  for (int row = 0; row < phase.height; ++row) {
    for (int col = 0; col < phase.width; ++col) {
      if (!phase.is_valid(row, col)) continue;
      const double nu_p = phase.at(row, col) * rig.proj_height / kTwoPi;
      const double q = (nu_p - rig.proj_cy) / rig.proj_fy;
      const Vec3 dir = r_pc * Vec3((col - rig.cam_cx) / rig.cam_fx,
                                   (row - rig.cam_cy) / rig.cam_fy, 1.0);
      const double denom = dir.y() - q * dir.z();
      if (std::abs(denom) < 1e-12) {
        ++stats.skipped_degenerate;
        continue;
      }
      const double lambda = (q * origin.z() - origin.y()) / denom;
      if (lambda <= 0.0) {
        ++stats.skipped_behind;
        continue;
      }
      const Vec3 x = origin + lambda * dir;
      if (x.z() <= 1e-9) {
        ++stats.skipped_behind;
        continue;
      }
      cloud.add(x, col, row);
      ++stats.produced;
    }
  }
  if (report) *report = stats;
  return cloud;
}

}  // namespace slikit
