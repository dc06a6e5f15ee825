#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "slikit/geometry.hpp"

namespace slikit {

// Wraps x into [0, 2*pi).
inline double wrap_phase(double x) {
  double y = std::fmod(x, kTwoPi);
  if (y < 0.0) y += kTwoPi;
  return y;
}

// Camera image of normalized reflectance values in [0, 1].
struct RawImage {
  int width = 0;
  int height = 0;
  std::vector<double> intensity;

  RawImage() = default;
  RawImage(int w, int h, double fill = 0.0)
      : width(w), height(h), intensity(static_cast<std::size_t>(w) * h, fill) {}

  double at(int row, int col) const { return intensity[idx(row, col)]; }
  void set(int row, int col, double v) {
    intensity[idx(row, col)] = std::clamp(v, 0.0, 1.0);
  }
  std::size_t idx(int row, int col) const {
    return static_cast<std::size_t>(row) * width + col;
  }
};

// Dense per-pixel wrapped phase in [0, 2*pi) with a validity mask. Invalid
// pixels hold 0 in the phase array; the mask is the source of truth and
// samplers never read through it.
struct PhaseImage {
  int width = 0;
  int height = 0;
  std::vector<double> phase;
  std::vector<std::uint8_t> valid;

  PhaseImage() = default;
  PhaseImage(int w, int h)
      : width(w),
        height(h),
        phase(static_cast<std::size_t>(w) * h, 0.0),
        valid(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t idx(int row, int col) const {
    return static_cast<std::size_t>(row) * width + col;
  }
  double at(int row, int col) const { return phase[idx(row, col)]; }
  bool is_valid(int row, int col) const { return valid[idx(row, col)] != 0; }
  void set(int row, int col, double v) {
    phase[idx(row, col)] = v;
    valid[idx(row, col)] = 1;
  }
  void set_invalid(int row, int col) {
    phase[idx(row, col)] = 0.0;
    valid[idx(row, col)] = 0;
  }

  std::size_t count_valid() const {
    std::size_t n = 0;
    for (auto v : valid) n += v != 0;
    return n;
  }
};

// Bilinear sample of a phase image at sub-pixel (mu, nu); integer coordinates
// address pixel centers. gx/gy are the exact partial derivatives of the
// bilinear surface within the enclosing cell, so downstream Jacobians are the
// true derivatives of the sampled value. Invalid when any stencil neighbor is
// masked or the point leaves the one-pixel interior margin.
struct PhaseSample {
  double value = 0.0;
  double gx = 0.0;  // d(value)/d(mu), radians per pixel
  double gy = 0.0;  // d(value)/d(nu)
  bool valid = false;
};

inline PhaseSample sample_phase(const PhaseImage& img, double mu, double nu) {
  PhaseSample out;
  if (!(mu >= 0.0) || !(nu >= 0.0)) return out;
  const int c0 = static_cast<int>(mu);
  const int r0 = static_cast<int>(nu);
  if (c0 + 1 >= img.width || r0 + 1 >= img.height) return out;
  if (!img.is_valid(r0, c0) || !img.is_valid(r0, c0 + 1) ||
      !img.is_valid(r0 + 1, c0) || !img.is_valid(r0 + 1, c0 + 1)) {
    return out;
  }
  const double fx = mu - c0;
  const double fy = nu - r0;
  const double p00 = img.at(r0, c0);
  const double p01 = img.at(r0, c0 + 1);
  const double p10 = img.at(r0 + 1, c0);
  const double p11 = img.at(r0 + 1, c0 + 1);
  out.value = (1.0 - fy) * ((1.0 - fx) * p00 + fx * p01) +
              fy * ((1.0 - fx) * p10 + fx * p11);
  out.gx = (1.0 - fy) * (p01 - p00) + fy * (p11 - p10);
  out.gy = (1.0 - fx) * (p10 - p00) + fx * (p11 - p01);
  out.valid = true;
  return out;
}

// Half-open pixel rectangle [u_min, u_max) x [v_min, v_max).
struct Roi {
  int u_min = 0, u_max = 0;
  int v_min = 0, v_max = 0;

  Roi() = default;
  Roi(int umin, int umax, int vmin, int vmax)
      : u_min(umin), u_max(umax), v_min(vmin), v_max(vmax) {}

  long area() const {
    return static_cast<long>(u_max - u_min) * (v_max - v_min);
  }
  bool contains(double mu, double nu) const {
    return mu >= u_min && mu < u_max && nu >= v_min && nu < v_max;
  }
  void validate(int width, int height) const {
    if (!(0 <= u_min && u_min < u_max && u_max <= width) ||
        !(0 <= v_min && v_min < v_max && v_max <= height)) {
      throw std::invalid_argument("Roi out of image bounds");
    }
    if (area() < 100) {
      throw std::invalid_argument("Roi smaller than 100 pixels");
    }
  }
};

}  // namespace slikit
