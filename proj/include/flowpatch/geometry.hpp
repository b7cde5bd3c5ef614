#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "flowpatch/raster.hpp"

namespace flowpatch {

/// The raster k x k structuring element used for the error band.
inline constexpr int kDefaultDilation = 17;

/// Bilinear footprint of a continuous sample point.
///
/// Taps with zero weight are dropped, so integer positions touch exactly one
/// pixel and a sample on the last row/column does not reach past the edge.
struct Footprint {
  std::array<int, 4> x{};
  std::array<int, 4> y{};
  std::array<double, 4> w{};
  int taps = 0;
};

inline Footprint bilinear_footprint(double sx, double sy) {
  Footprint fp;
  // Non-finite or absurdly distant points get an empty footprint.
  if (!std::isfinite(sx) || !std::isfinite(sy) || std::abs(sx) > 1e9 ||
      std::abs(sy) > 1e9) {
    return fp;
  }
  const double fx0 = std::floor(sx);
  const double fy0 = std::floor(sy);
  const double ax = sx - fx0;
  const double ay = sy - fy0;
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);
  const std::array<double, 2> wx = {1.0 - ax, ax};
  const std::array<double, 2> wy = {1.0 - ay, ay};
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      const double w = wx[i] * wy[j];
      if (w == 0.0) continue;
      fp.x[fp.taps] = x0 + i;
      fp.y[fp.taps] = y0 + j;
      fp.w[fp.taps] = w;
      ++fp.taps;
    }
  }
  return fp;
}

template <typename T, int C>
bool footprint_inside(const Footprint& fp, const Image<T, C>& img) {
  if (fp.taps == 0) return false;
  for (int k = 0; k < fp.taps; ++k) {
    if (!img.contains(fp.x[k], fp.y[k])) return false;
  }
  return true;
}

/// Weighted sum over a footprint; caller guarantees the taps are inside.
template <typename T, int C>
double sample(const Image<T, C>& img, const Footprint& fp, int c) {
  // A single full-weight tap returns the stored sample untouched.
  if (fp.taps == 1) return static_cast<double>(img.at(fp.x[0], fp.y[0], c));
  double acc = 0.0;
  for (int k = 0; k < fp.taps; ++k) {
    acc += fp.w[k] * static_cast<double>(img.at(fp.x[k], fp.y[k], c));
  }
  return acc;
}

struct WarpResult {
  Frame image;
  /// 1 where the sample landed fully inside the source and the flow was valid.
  Mask inbounds;
};

/// Samples `src` at p + flow(p) for every pixel p.
///
/// Out-of-bounds or invalid-flow pixels are written as 0 and flagged in
/// `inbounds`; they are never clamped to the edge.
inline WarpResult backward_warp(const Frame& src, const FlowField& flow) {
  require_same_geometry(src, flow, "backward_warp");
  WarpResult out{Frame(src.width(), src.height()), Mask(src.width(), src.height())};
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      if (!flow.valid(x, y)) continue;
      const Footprint fp = bilinear_footprint(x + flow.u(x, y), y + flow.v(x, y));
      if (!footprint_inside(fp, src)) continue;
      for (int c = 0; c < 3; ++c) out.image.at(x, y, c) = sample(src, fp, c);
      out.inbounds.at(x, y) = 1;
    }
  }
  return out;
}

/// Bilinear warp of a mask as a real field. Samples that leave the raster,
/// or whose flow is invalid, read as 1 (hole).
inline Plane warp_mask(const Mask& mask, const FlowField& flow) {
  require_same_geometry(mask, flow, "warp_mask");
  Plane out(mask.width(), mask.height(), 1.0);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!flow.valid(x, y)) continue;
      const Footprint fp = bilinear_footprint(x + flow.u(x, y), y + flow.v(x, y));
      if (!footprint_inside(fp, mask)) continue;
      out.at(x, y) = sample(mask, fp, 0);
    }
  }
  return out;
}

/// 1 where the warped mask has no hole contamination at all.
inline Mask warped_validity(const Plane& warped) {
  Mask out(warped.width(), warped.height());
  auto src = warped.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] > 0.0 ? 0 : 1;
  return out;
}

inline Mask warped_validity(const Mask& mask, const FlowField& flow) {
  return warped_validity(warp_mask(mask, flow));
}

/// Chains a->b with b->c into a->c.
inline FlowField compose_flows(const FlowField& ab, const FlowField& bc) {
  require_same_geometry(ab, bc, "compose_flows");
  FlowField ac(ab.width(), ab.height());
  for (int y = 0; y < ab.height(); ++y) {
    for (int x = 0; x < ab.width(); ++x) {
      ac.set_valid(x, y, false);
      if (!ab.valid(x, y)) continue;
      const Footprint fp = bilinear_footprint(x + ab.u(x, y), y + ab.v(x, y));
      if (!footprint_inside(fp, bc.vectors())) continue;
      bool taps_valid = true;
      for (int k = 0; k < fp.taps; ++k) taps_valid = taps_valid && bc.valid(fp.x[k], fp.y[k]);
      if (!taps_valid) continue;
      ac.u(x, y) = ab.u(x, y) + sample(bc.vectors(), fp, 0);
      ac.v(x, y) = ab.v(x, y) + sample(bc.vectors(), fp, 1);
      ac.set_valid(x, y, true);
    }
  }
  return ac;
}

/// Square k x k morphological dilation, clipped at the borders.
inline Mask dilate(const Mask& mask, int k) {
  if (k < 1 || k % 2 == 0) {
    throw Error("dilate: kernel size must be odd and positive, got " + std::to_string(k));
  }
  const int r = k / 2;
  const int w = mask.width();
  const int h = mask.height();
  // Separable: horizontal then vertical running max via prefix counts.
  Mask horiz(w, h);
  std::vector<int> prefix(static_cast<std::size_t>(w) + 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + (mask.at(x, y) ? 1 : 0);
    for (int x = 0; x < w; ++x) {
      const int lo = std::max(0, x - r);
      const int hi = std::min(w, x + r + 1);
      horiz.at(x, y) = prefix[hi] - prefix[lo] > 0 ? 1 : 0;
    }
  }
  Mask out(w, h);
  prefix.assign(static_cast<std::size_t>(h) + 1, 0);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) prefix[y + 1] = prefix[y] + (horiz.at(x, y) ? 1 : 0);
    for (int y = 0; y < h; ++y) {
      const int lo = std::max(0, y - r);
      const int hi = std::min(h, y + r + 1);
      out.at(x, y) = prefix[hi] - prefix[lo] > 0 ? 1 : 0;
    }
  }
  return out;
}

}  // namespace flowpatch
