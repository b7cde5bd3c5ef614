#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "flowpatch/raster.hpp"

namespace flowpatch {

struct SolveStats {
  int iterations = 0;
  bool converged = false;
};

namespace detail {

/// Sparse weighted graph Laplacian restricted to the unknown pixels of a mask.
///
/// Each unknown p carries the row  sum_q w_pq (u_p - u_q) = 0  over its
/// in-raster 4-neighbours; known neighbours move to the right-hand side.
class LaplaceSystem {
 public:
  static constexpr double kMinWeight = 1e-12;

  LaplaceSystem(const Mask& unknown, const Frame* guide, double beta)
      : width_(unknown.width()), height_(unknown.height()) {
    index_.assign(unknown.pixel_count(), -1);
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        if (!unknown.at(x, y)) continue;
        index_[flat(x, y)] = static_cast<int>(xs_.size());
        xs_.push_back(x);
        ys_.push_back(y);
      }
    }
    const std::size_t n = xs_.size();
    links_.resize(n);
    diag_.assign(n, 0.0);
    static constexpr std::array<std::array<int, 2>, 4> offsets = {
        {{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
    for (std::size_t i = 0; i < n; ++i) {
      const int x = xs_[i];
      const int y = ys_[i];
      for (const auto& d : offsets) {
        const int qx = x + d[0];
        const int qy = y + d[1];
        if (qx < 0 || qy < 0 || qx >= width_ || qy >= height_) continue;
        double w = 1.0;
        if (guide != nullptr && beta > 0.0) {
          double l1 = 0.0;
          for (int c = 0; c < 3; ++c) l1 += std::abs(guide->at(x, y, c) - guide->at(qx, qy, c));
          w = std::max(std::exp(-beta * l1), kMinWeight);
        }
        links_[i].push_back({index_[flat(qx, qy)], qx, qy, w});
        diag_[i] += w;
      }
    }
    label_components();
  }

  std::size_t size() const { return xs_.size(); }

  /// Solves channel `c` of `field` in place over the unknown pixels.
  template <int C>
  SolveStats solve(Image<double, C>& field, int c, double tol, int max_iter) const {
    SolveStats stats;
    const std::size_t n = size();
    if (n == 0) {
      stats.converged = true;
      return stats;
    }

    std::vector<double> b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (const Link& l : links_[i]) {
        if (l.unknown < 0) b[i] += l.weight * field.at(l.x, l.y, c);
      }
    }

    // Start from the mean Dirichlet value of each connected component.
    std::vector<double> sum(component_count_, 0.0);
    std::vector<int> cnt(component_count_, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (const Link& l : links_[i]) {
        if (l.unknown >= 0) continue;
        sum[component_[i]] += field.at(l.x, l.y, c);
        ++cnt[component_[i]];
      }
    }
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = sum[component_[i]] / cnt[component_[i]];

    // Jacobi-preconditioned conjugate gradient.
    std::vector<double> r(n), z(n), p(n), ap(n);
    apply(u, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = r[i] / diag_[i];
      p[i] = z[i];
      rz += r[i] * z[i];
    }
    const double residual_floor = 1e-15 * (1.0 + max_abs(b));
    if (max_abs(r) <= residual_floor) stats.converged = true;

    while (!stats.converged && stats.iterations < max_iter) {
      apply(p, ap);
      double pap = 0.0;
      for (std::size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
      if (!(pap > 0.0)) {
        stats.converged = true;
        break;
      }
      const double alpha = rz / pap;
      double max_update = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        u[i] += alpha * p[i];
        r[i] -= alpha * ap[i];
        max_update = std::max(max_update, std::abs(alpha * p[i]));
      }
      ++stats.iterations;
      if (max_update < tol || max_abs(r) <= residual_floor) {
        stats.converged = true;
        break;
      }
      double rz_next = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        z[i] = r[i] / diag_[i];
        rz_next += r[i] * z[i];
      }
      const double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }

    for (std::size_t i = 0; i < n; ++i) field.at(xs_[i], ys_[i], c) = u[i];
    return stats;
  }

 private:
  struct Link {
    int unknown;  // index into the unknown list, or -1 for a Dirichlet pixel
    int x;
    int y;
    double weight;
  };

  std::size_t flat(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  static double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double s : v) m = std::max(m, std::abs(s));
    return m;
  }

  void apply(const std::vector<double>& in, std::vector<double>& out) const {
    for (std::size_t i = 0; i < in.size(); ++i) {
      double acc = diag_[i] * in[i];
      for (const Link& l : links_[i]) {
        if (l.unknown >= 0) acc -= l.weight * in[l.unknown];
      }
      out[i] = acc;
    }
  }

  // Every 4-connected group of unknowns needs at least one Dirichlet
  // neighbour, otherwise the system is singular.
  void label_components() {
    const std::size_t n = size();
    component_.assign(n, -1);
    std::vector<int> stack;
    for (std::size_t seed = 0; seed < n; ++seed) {
      if (component_[seed] >= 0) continue;
      const int id = component_count_++;
      bool anchored = false;
      component_[seed] = id;
      stack.push_back(static_cast<int>(seed));
      while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        for (const Link& l : links_[i]) {
          if (l.unknown < 0) {
            anchored = true;
          } else if (component_[l.unknown] < 0) {
            component_[l.unknown] = id;
            stack.push_back(l.unknown);
          }
        }
      }
      if (!anchored) {
        throw Error("unsolvable fill: a hole region has no valid boundary pixels");
      }
    }
  }

  int width_;
  int height_;
  std::vector<int> index_;
  std::vector<int> xs_;
  std::vector<int> ys_;
  std::vector<std::vector<Link>> links_;
  std::vector<double> diag_;
  std::vector<int> component_;
  int component_count_ = 0;
};

}  // namespace detail

/// Replaces the `unknown` pixels of every channel of `field` with the
/// solution of the (optionally guide-weighted) discrete Laplace equation.
///
/// Edge weights are exp(-beta * |guide(p) - guide(q)|_1); a null guide or
/// beta == 0 gives the plain harmonic extension. Iterates until the largest
/// per-pixel update drops below `tol` or `max_iter` is reached.
template <int C>
SolveStats solve_harmonic(Image<double, C>& field, const Mask& unknown,
                          const Frame* guide, double beta, double tol,
                          int max_iter) {
  require_same_geometry(field, unknown, "harmonic fill");
  if (guide != nullptr) require_same_geometry(field, *guide, "harmonic fill guide");
  const detail::LaplaceSystem system(unknown, guide, beta);
  SolveStats worst{0, true};
  for (int c = 0; c < C; ++c) {
    const SolveStats s = system.solve(field, c, tol, max_iter);
    worst.iterations = std::max(worst.iterations, s.iterations);
    worst.converged = worst.converged && s.converged;
  }
  return worst;
}

}  // namespace flowpatch
