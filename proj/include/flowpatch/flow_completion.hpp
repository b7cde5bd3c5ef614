#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "flowpatch/geometry.hpp"
#include "flowpatch/io.hpp"
#include "flowpatch/laplace.hpp"
#include "flowpatch/parallel.hpp"
#include "flowpatch/raster.hpp"

namespace flowpatch {

/// Knobs for the guided Laplace solve used to complete flow channels.
struct GuidedSolveConfig {
  double beta = 10.0;   // edge sensitivity on [0,1] guide values
  double tol = 1e-4;    // stop when the largest per-pixel update is below this
  int max_iter = 2000;

  void validate() const {
    if (!(beta >= 0.0)) throw Error("solver: beta must be >= 0");
    if (!(tol > 0.0 && tol < 1.0)) throw Error("solver: tol must lie in (0, 1)");
    if (max_iter < 1) throw Error("solver: max_iter must be >= 1");
  }
};

struct FlowCompletionConfig {
  GuidedSolveConfig solve;
  int temporal_radius = 5;  // window half-width for the local temporal fill
  int search_radius = 4;    // block-match search range per pyramid level
  int patch = 7;            // block-match window side
  int threads = 1;
};

/// Roughly completed frame t: hole pixels copied from the temporally nearest
/// frame in [t-N, t+N] where they are valid (earlier frame wins a tie), and
/// anything valid nowhere in the window filled harmonically.
inline Frame local_temporal_fill(const Sequence& seq, int t, int radius,
                                 const GuidedSolveConfig& solve = {}) {
  seq.validate();
  if (t < 0 || t >= seq.length()) {
    throw Error("local_temporal_fill: index " + std::to_string(t) + " out of range");
  }
  Frame out = seq.frames[t];
  const Mask& hole = seq.masks[t];
  Mask unresolved(out.width(), out.height());
  bool any_unresolved = false;
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      if (!hole.at(x, y)) continue;
      int source = -1;
      for (int d = 1; d <= radius && source < 0; ++d) {
        for (int s : {t - d, t + d}) {
          if (s >= 0 && s < seq.length() && !seq.masks[s].at(x, y)) {
            source = s;
            break;
          }
        }
      }
      if (source >= 0) {
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = seq.frames[source].at(x, y, c);
      } else {
        unresolved.at(x, y) = 1;
        any_unresolved = true;
      }
    }
  }
  if (any_unresolved) {
    solve_harmonic(out, unresolved, nullptr, 0.0, solve.tol, solve.max_iter);
    clamp_unit(out);
  }
  return out;
}

/// Completes u and v inside `hole` by guided diffusion from the surrounding
/// flow. Pixels outside the hole are returned unchanged; every flag in the
/// result is valid.
inline FlowField complete_flow(const FlowField& flow, const Mask& hole,
                               const Frame& guide, const GuidedSolveConfig& cfg) {
  cfg.validate();
  require_same_geometry(flow, hole, "complete_flow");
  require_same_geometry(flow, guide, "complete_flow guide");
  FlowField out = flow;
  if (any(hole)) {
    solve_harmonic(out.vectors(), hole, &guide, cfg.beta, cfg.tol, cfg.max_iter);
  }
  for (auto& f : out.validity().data()) f = 1;
  return out;
}

namespace detail {

inline Frame half_scale(const Frame& f) {
  Frame out(f.width() / 2, f.height() / 2);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        out.at(x, y, c) = 0.25 * (f.at(2 * x, 2 * y, c) + f.at(2 * x + 1, 2 * y, c) +
                                  f.at(2 * x, 2 * y + 1, c) + f.at(2 * x + 1, 2 * y + 1, c));
      }
    }
  }
  return out;
}

// Mean absolute difference over the overlap of the two windows.
inline double window_cost(const Frame& a, const Frame& b, int x, int y, int dx,
                          int dy, int half) {
  double sum = 0.0;
  int n = 0;
  for (int oy = -half; oy <= half; ++oy) {
    for (int ox = -half; ox <= half; ++ox) {
      const int ax = x + ox, ay = y + oy;
      const int bx = ax + dx, by = ay + dy;
      if (!a.contains(ax, ay) || !b.contains(bx, by)) continue;
      for (int c = 0; c < 3; ++c) sum += std::abs(a.at(ax, ay, c) - b.at(bx, by, c));
      ++n;
    }
  }
  return n > 0 ? sum / n : std::numeric_limits<double>::infinity();
}

// True when candidate (u, v) at `cost` beats the incumbent.
inline bool better_match(double cost, int u, int v, double best_cost, int bu, int bv) {
  if (cost != best_cost) return cost < best_cost;
  const int mag = u * u + v * v;
  const int best_mag = bu * bu + bv * bv;
  if (mag != best_mag) return mag < best_mag;
  if (u != bu) return u < bu;
  return v < bv;
}

}  // namespace detail

/// Integer-displacement flow from `a` to `b` by SAD block matching over a
/// three-level pyramid: a(p) ~ b(p + flow(p)).
inline FlowField estimate_flow_blockmatch(const Frame& a, const Frame& b, int radius,
                                          int patch) {
  require_same_geometry(a, b, "estimate_flow_blockmatch");
  if (patch < 1 || patch % 2 == 0) throw Error("block match: patch must be odd and positive");
  if (radius < 1) throw Error("block match: radius must be >= 1");

  std::vector<Frame> pyr_a{a};
  std::vector<Frame> pyr_b{b};
  while (pyr_a.size() < 3 && pyr_a.back().width() >= 16 && pyr_a.back().height() >= 16) {
    pyr_a.push_back(detail::half_scale(pyr_a.back()));
    pyr_b.push_back(detail::half_scale(pyr_b.back()));
  }

  const int half = patch / 2;
  std::vector<int> guess_u, guess_v;  // coarser-level result, in that level's units
  int guess_w = 0, guess_h = 0;
  FlowField result;
  for (int level = static_cast<int>(pyr_a.size()) - 1; level >= 0; --level) {
    const Frame& la = pyr_a[level];
    const Frame& lb = pyr_b[level];
    const int w = la.width(), h = la.height();
    std::vector<int> out_u(static_cast<std::size_t>(w) * h), out_v(out_u.size());
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        int cu = 0, cv = 0;
        if (!guess_u.empty()) {
          const int gx = std::min(x / 2, guess_w - 1);
          const int gy = std::min(y / 2, guess_h - 1);
          cu = 2 * guess_u[static_cast<std::size_t>(gy) * guess_w + gx];
          cv = 2 * guess_v[static_cast<std::size_t>(gy) * guess_w + gx];
        }
        double best = std::numeric_limits<double>::infinity();
        int bu = 0, bv = 0;
        bool found = false;
        for (int dv = cv - radius; dv <= cv + radius; ++dv) {
          for (int du = cu - radius; du <= cu + radius; ++du) {
            if (!lb.contains(x + du, y + dv)) continue;
            const double cost = detail::window_cost(la, lb, x, y, du, dv, half);
            if (!found || detail::better_match(cost, du, dv, best, bu, bv)) {
              best = cost;
              bu = du;
              bv = dv;
              found = true;
            }
          }
        }
        out_u[static_cast<std::size_t>(y) * w + x] = bu;
        out_v[static_cast<std::size_t>(y) * w + x] = bv;
      }
    }
    guess_u = std::move(out_u);
    guess_v = std::move(out_v);
    guess_w = w;
    guess_h = h;
  }

  result = FlowField(a.width(), a.height());
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      result.u(x, y) = guess_u[static_cast<std::size_t>(y) * guess_w + x];
      result.v(x, y) = guess_v[static_cast<std::size_t>(y) * guess_w + x];
    }
  }
  return result;
}

/// Adjacent-frame completed flows. forward[t] maps frame t to t+1 and
/// backward[t] maps frame t+1 to t.
struct CompletedFlows {
  std::vector<FlowField> forward;
  std::vector<FlowField> backward;
};

inline std::filesystem::path flow_file(const std::filesystem::path& dir, int pair,
                                       bool forward) {
  return dir / (std::to_string(pair) + (forward ? "_fwd.flo" : "_bwd.flo"));
}

/// Builds bi-directional completed flows for every adjacent pair.
///
/// Raw flows come from `external_dir` when given, otherwise from block
/// matching on the locally filled frames. Each pair is completed over the
/// union of both frames' holes.
inline CompletedFlows build_completed_flows(
    const Sequence& seq, const FlowCompletionConfig& cfg,
    const std::optional<std::filesystem::path>& external_dir = std::nullopt) {
  seq.validate();
  cfg.solve.validate();
  const int pairs = seq.length() - 1;
  CompletedFlows out;
  if (pairs <= 0) return out;

  if (external_dir) {
    for (int t = 0; t < pairs; ++t) {
      for (bool fwd : {true, false}) {
        const auto path = flow_file(*external_dir, t, fwd);
        if (!std::filesystem::exists(path)) {
          throw Error("missing external flow file: " + path.string());
        }
      }
    }
  }

  std::vector<Frame> guides(static_cast<std::size_t>(seq.length()));
  parallel_for(seq.length(), cfg.threads, [&](int t) {
    guides[t] = local_temporal_fill(seq, t, cfg.temporal_radius, cfg.solve);
  });

  out.forward.resize(pairs);
  out.backward.resize(pairs);
  parallel_for(pairs, cfg.threads, [&](int t) {
    FlowField fwd, bwd;
    if (external_dir) {
      fwd = read_flo(flow_file(*external_dir, t, true));
      bwd = read_flo(flow_file(*external_dir, t, false));
      require_same_geometry(fwd, seq.frames[t], "external flow");
      require_same_geometry(bwd, seq.frames[t], "external flow");
    } else {
      fwd = estimate_flow_blockmatch(guides[t], guides[t + 1], cfg.search_radius, cfg.patch);
      bwd = estimate_flow_blockmatch(guides[t + 1], guides[t], cfg.search_radius, cfg.patch);
    }
    const Mask hole = mask_union(seq.masks[t], seq.masks[t + 1]);
    out.forward[t] = complete_flow(fwd, hole, guides[t], cfg.solve);
    out.backward[t] = complete_flow(bwd, hole, guides[t + 1], cfg.solve);
  });
  return out;
}

}  // namespace flowpatch
