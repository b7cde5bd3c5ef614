#pragma once

// Synthetic scenes and independent oracles shared by the unit and
// acceptance suites. Nothing here calls into the code paths it checks.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "flowpatch/raster.hpp"

namespace flowpatch::testing {

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline Frame random_frame(std::mt19937_64& rng, int w, int h) {
  Frame f(w, h);
  for (double& s : f.data()) s = uniform01(rng);
  return f;
}

inline Frame constant_frame(int w, int h, double value) {
  Frame f(w, h);
  for (double& s : f.data()) s = value;
  return f;
}

/// Smooth periodic texture, values within [0.5 - 2*amp, 0.5 + 2*amp].
struct SmoothTexture {
  double period_x = 40.0;
  double period_y = 33.0;
  double amp = 0.15;

  double operator()(double x, double y, int c) const {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    return 0.5 + amp * std::sin(two_pi * x / period_x + 0.9 * c) +
           amp * std::sin(two_pi * y / period_y + 1.7 * c + 0.3);
  }

  Frame render(int w, int h, double shift_x = 0.0, double shift_y = 0.0) const {
    Frame f(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) f.at(x, y, c) = (*this)(x - shift_x, y - shift_y, c);
      }
    }
    return f;
  }
};

inline Mask rect_mask(int w, int h, int x0, int y0, int rw, int rh) {
  Mask m(w, h);
  for (int y = std::max(0, y0); y < std::min(h, y0 + rh); ++y) {
    for (int x = std::max(0, x0); x < std::min(w, x0 + rw); ++x) m.at(x, y) = 1;
  }
  return m;
}

/// Scene translating by (vx, vy) per frame: frame t shows the texture
/// shifted by t*(vx, vy), so the true flow t -> t+1 is (vx, vy).
struct TranslatingScene {
  Sequence observed;
  std::vector<Frame> truth;
  double vx = 0.0;
  double vy = 0.0;
};

inline TranslatingScene translating_scene(const SmoothTexture& tex, int w, int h, int length,
                                          double vx, double vy,
                                          const std::vector<Mask>& holes) {
  TranslatingScene s;
  s.vx = vx;
  s.vy = vy;
  for (int t = 0; t < length; ++t) {
    Frame f = tex.render(w, h, vx * t, vy * t);
    s.truth.push_back(f);
    const Mask& m = holes[t];
    // Hole content is garbage in the observed frame.
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!m.at(x, y)) continue;
        for (int c = 0; c < 3; ++c) f.at(x, y, c) = (c == 1) ? 1.0 : 0.0;
      }
    }
    s.observed.frames.push_back(std::move(f));
    s.observed.masks.push_back(m);
  }
  return s;
}

/// Whether the continuous point (sx, sy) has a clean bilinear footprint in
/// a raster with hole mask `m`: every tap of nonzero weight inside and not
/// a hole.
inline bool clean_footprint(const Mask& m, double sx, double sy) {
  const double fx = std::floor(sx), fy = std::floor(sy);
  const int xs[2] = {static_cast<int>(fx), static_cast<int>(fx) + (sx > fx ? 1 : 0)};
  const int ys[2] = {static_cast<int>(fy), static_cast<int>(fy) + (sy > fy ? 1 : 0)};
  for (int yy : ys) {
    for (int xx : xs) {
      if (xx < 0 || yy < 0 || xx >= m.width() || yy >= m.height()) return false;
      if (m.at(xx, yy)) return false;
    }
  }
  return true;
}

/// Hole pixels of frame t that no other frame shows under pure translation.
inline Mask never_visible(const std::vector<Mask>& holes, int t, double vx, double vy) {
  const Mask& m = holes[t];
  Mask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m.at(x, y)) continue;
      bool seen = false;
      for (int j = 0; j < static_cast<int>(holes.size()) && !seen; ++j) {
        if (j == t) continue;
        seen = clean_footprint(holes[j], x + vx * (j - t), y + vy * (j - t));
      }
      out.at(x, y) = seen ? 0 : 1;
    }
  }
  return out;
}

/// Dense Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t k = i + 1; k < n; ++k) acc -= a[i][k] * x[k];
    x[i] = acc / a[i][i];
  }
  return x;
}

/// Unweighted discrete Laplace fill of channel `c` over `unknown` by a
/// dense direct solve; returns the full channel as a row-major vector.
template <typename ImageT>
std::vector<double> dense_harmonic(const ImageT& field, const Mask& unknown, int c) {
  const int w = field.width(), h = field.height();
  std::vector<int> id(static_cast<std::size_t>(w) * h, -1);
  int n = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (unknown.at(x, y)) id[y * w + x] = n++;
    }
  }
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 0.0);
  const int dx[4] = {-1, 1, 0, 0}, dy[4] = {0, 0, -1, 1};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int i = id[y * w + x];
      if (i < 0) continue;
      for (int k = 0; k < 4; ++k) {
        const int qx = x + dx[k], qy = y + dy[k];
        if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
        a[i][i] += 1.0;
        const int j = id[qy * w + qx];
        if (j >= 0) {
          a[i][j] -= 1.0;
        } else {
          b[i] += field.at(qx, qy, c);
        }
      }
    }
  }
  const auto sol = dense_solve(a, b);
  std::vector<double> out(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int i = id[y * w + x];
      out[y * w + x] = i >= 0 ? sol[i] : field.at(x, y, c);
    }
  }
  return out;
}

/// SSIM by explicit per-window sums (no separable filtering).
inline double ssim_direct(const Frame& a, const Frame& b) {
  double g[11][11];
  double norm = 0.0;
  for (int j = 0; j < 11; ++j) {
    for (int i = 0; i < 11; ++i) {
      g[j][i] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
      norm += g[j][i];
    }
  }
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0;
    int windows = 0;
    for (int y0 = 0; y0 + 11 <= a.height(); ++y0) {
      for (int x0 = 0; x0 + 11 <= a.width(); ++x0) {
        double ma = 0, mb = 0;
        for (int j = 0; j < 11; ++j) {
          for (int i = 0; i < 11; ++i) {
            ma += g[j][i] / norm * a.at(x0 + i, y0 + j, c);
            mb += g[j][i] / norm * b.at(x0 + i, y0 + j, c);
          }
        }
        double va = 0, vb = 0, cov = 0;
        for (int j = 0; j < 11; ++j) {
          for (int i = 0; i < 11; ++i) {
            const double da = a.at(x0 + i, y0 + j, c) - ma;
            const double db = b.at(x0 + i, y0 + j, c) - mb;
            va += g[j][i] / norm * da * da;
            vb += g[j][i] / norm * db * db;
            cov += g[j][i] / norm * da * db;
          }
        }
        sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++windows;
      }
    }
    total += sum / windows;
  }
  return total / 3.0;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("flowpatch_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace flowpatch::testing
