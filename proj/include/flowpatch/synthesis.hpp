#pragma once

#include "flowpatch/laplace.hpp"
#include "flowpatch/raster.hpp"

namespace flowpatch {

struct SynthesisConfig {
  double tol = 1e-4;
  int max_iter = 2000;
};

/// Harmonic fill of the `remaining` pixels from everything around them.
inline Frame diffuse_fill(const Frame& frame, const Mask& remaining, double tol = 1e-4,
                          int max_iter = 2000) {
  require_same_geometry(frame, remaining, "diffuse_fill");
  Frame out = frame;
  if (!any(remaining)) return out;
  solve_harmonic(out, remaining, nullptr, 0.0, tol, max_iter);
  clamp_unit(out);
  return out;
}

inline Frame diffuse_fill(const Frame& frame, const Mask& remaining,
                          const SynthesisConfig& cfg) {
  return diffuse_fill(frame, remaining, cfg.tol, cfg.max_iter);
}

}  // namespace flowpatch
