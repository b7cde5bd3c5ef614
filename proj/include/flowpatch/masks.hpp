#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "flowpatch/raster.hpp"

namespace flowpatch {

enum class MaskKind { stationary, moving };

/// Free-form stroke recipe for moving masks. Lengths are fractions of
/// min(H, W); angles are radians.
struct StrokeParams {
  int min_strokes = 1;
  int max_strokes = 3;
  int min_vertices = 4;
  int max_vertices = 8;
  double min_width = 0.05;
  double max_width = 0.10;
  double step = 0.12;
  double angle_jitter = 0.7;
  double max_drift = 0.015;  // per frame
  double min_ratio = 0.02;   // accepted hole fraction of the frame area
  double max_ratio = 0.15;
};

struct MaskGenConfig {
  MaskKind kind = MaskKind::stationary;
  std::uint64_t seed = 0;
  int cols = 5;
  int rows = 4;
  StrokeParams strokes;

  void validate() const {
    if (cols < 1 || rows < 1) throw Error("genmask: grid must be at least 1x1");
    const auto& s = strokes;
    if (s.min_strokes < 1 || s.max_strokes < s.min_strokes ||
        s.min_vertices < 2 || s.max_vertices < s.min_vertices ||
        !(s.min_width > 0.0) || s.max_width < s.min_width || !(s.step > 0.0) ||
        s.angle_jitter < 0.0 || s.max_drift < 0.0 || !(s.min_ratio >= 0.0) ||
        s.max_ratio <= s.min_ratio) {
      throw Error("genmask: empty or invalid stroke parameter range");
    }
  }
};

namespace detail {

// Portable draws from mt19937_64; std distributions vary between libraries.
class MaskRng {
 public:
  explicit MaskRng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  int integer(int lo, int hi) {  // inclusive
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(engine_() % span);
  }

 private:
  std::mt19937_64 engine_;
};

// Folds p into [0, extent) by mirroring at the borders.
inline double reflect(double p, double extent) {
  if (extent <= 0.0) return 0.0;
  const double period = 2.0 * extent;
  double m = std::fmod(p, period);
  if (m < 0.0) m += period;
  return m < extent ? m : period - m;
}

inline void stamp_segment(Mask& m, double x0, double y0, double x1, double y1, double radius) {
  const int lo_x = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - radius)));
  const int hi_x = std::min(m.width() - 1, static_cast<int>(std::ceil(std::max(x0, x1) + radius)));
  const int lo_y = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - radius)));
  const int hi_y = std::min(m.height() - 1, static_cast<int>(std::ceil(std::max(y0, y1) + radius)));
  const double dx = x1 - x0;
  const double dy = y1 - y0;
  const double len2 = dx * dx + dy * dy;
  for (int y = lo_y; y <= hi_y; ++y) {
    for (int x = lo_x; x <= hi_x; ++x) {
      double t = len2 > 0.0 ? ((x - x0) * dx + (y - y0) * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double px = x0 + t * dx - x;
      const double py = y0 + t * dy - y;
      if (px * px + py * py <= radius * radius) m.at(x, y) = 1;
    }
  }
}

struct Stroke {
  std::vector<double> xs;
  std::vector<double> ys;
  double radius = 1.0;
  double vx = 0.0;
  double vy = 0.0;
};

inline std::vector<Stroke> draw_strokes(MaskRng& rng, const StrokeParams& p, int w, int h) {
  const double scale = std::min(w, h);
  std::vector<Stroke> strokes(static_cast<std::size_t>(rng.integer(p.min_strokes, p.max_strokes)));
  for (Stroke& s : strokes) {
    const int vertices = rng.integer(p.min_vertices, p.max_vertices);
    s.radius = 0.5 * scale * rng.uniform(p.min_width, p.max_width);
    double x = rng.uniform(0.0, w - 1.0);
    double y = rng.uniform(0.0, h - 1.0);
    double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    s.xs.push_back(x);
    s.ys.push_back(y);
    for (int v = 1; v < vertices; ++v) {
      angle += rng.uniform(-p.angle_jitter, p.angle_jitter);
      x = std::clamp(x + p.step * scale * std::cos(angle), 0.0, w - 1.0);
      y = std::clamp(y + p.step * scale * std::sin(angle), 0.0, h - 1.0);
      s.xs.push_back(x);
      s.ys.push_back(y);
    }
    const double speed = rng.uniform(0.0, p.max_drift) * scale;
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    s.vx = speed * std::cos(heading);
    s.vy = speed * std::sin(heading);
  }
  return strokes;
}

}  // namespace detail

/// Five-by-four (by default) grid of equal squares, side floor(min(H,W)/12),
/// centred on a uniform grid. Identical for every frame.
inline Mask stationary_grid_mask(int cols, int rows, int height, int width) {
  Mask m(width, height);
  const int side = std::min(height, width) / 12;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int cx = static_cast<int>((c + 0.5) * width / cols);
      const int cy = static_cast<int>((r + 0.5) * height / rows);
      const int x0 = cx - side / 2;
      const int y0 = cy - side / 2;
      for (int y = std::max(0, y0); y < std::min(height, y0 + side); ++y) {
        for (int x = std::max(0, x0); x < std::min(width, x0 + side); ++x) m.at(x, y) = 1;
      }
    }
  }
  return m;
}

/// Benchmark mask stacks. Pure function of (cfg, height, width, length).
inline std::vector<Mask> gen_masks(const MaskGenConfig& cfg, int height, int width, int length) {
  cfg.validate();
  if (height < 32 || width < 32) {
    throw Error("genmask: raster too small (" + std::to_string(width) + "x" +
                std::to_string(height) + ", need at least 32x32)");
  }
  if (length < 1) throw Error("genmask: need at least one frame");

  if (cfg.kind == MaskKind::stationary) {
    return std::vector<Mask>(static_cast<std::size_t>(length),
                             stationary_grid_mask(cfg.cols, cfg.rows, height, width));
  }

  const StrokeParams& p = cfg.strokes;
  const double area = static_cast<double>(width) * height;
  detail::MaskRng rng(cfg.seed);
  constexpr int kMaxAttempts = 500;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const auto strokes = detail::draw_strokes(rng, p, width, height);
    std::vector<Mask> stack;
    bool ok = true;
    for (int t = 0; t < length && ok; ++t) {
      Mask m(width, height);
      for (const auto& s : strokes) {
        auto px = [&](std::size_t i) { return detail::reflect(s.xs[i] + s.vx * t, width - 1.0); };
        auto py = [&](std::size_t i) { return detail::reflect(s.ys[i] + s.vy * t, height - 1.0); };
        for (std::size_t i = 0; i + 1 < s.xs.size(); ++i) {
          detail::stamp_segment(m, px(i), py(i), px(i + 1), py(i + 1), s.radius);
        }
      }
      const double ratio = static_cast<double>(count(m)) / area;
      ok = ratio >= p.min_ratio && ratio <= p.max_ratio && ratio > 0.0;
      stack.push_back(std::move(m));
    }
    if (ok) return stack;
  }
  throw Error("genmask: could not meet the hole-ratio bounds; widen the stroke ranges");
}

}  // namespace flowpatch
