#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#include "flowpatch/raster.hpp"
#include "flowpatch/state.hpp"

namespace flowpatch {

/// Error measured on the band between propagated content and known pixels.
struct ErrorGuidance {
  Frame error;  // propagated - truth on `mask`, zero elsewhere
  Mask mask;
};

/// Difference between the overfilled frame and the known original on the
/// band pixels sampled by the latest reference.
inline ErrorGuidance compute_error_guidance(const PropagationState& state,
                                            const Frame& original) {
  require_same_geometry(state.overfilled, original, "compute_error_guidance");
  ErrorGuidance g{Frame(original.width(), original.height()), state.err_mask};
  for (int y = 0; y < original.height(); ++y) {
    for (int x = 0; x < original.width(); ++x) {
      if (!g.mask.at(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        g.error.at(x, y, c) = state.overfilled.at(x, y, c) - original.at(x, y, c);
      }
    }
  }
  return g;
}

/// Coordinates normalised to [-1, 1] across the raster.
inline double normalized_coord(int i, int extent) {
  return extent > 1 ? 2.0 * i / (extent - 1) - 1.0 : 0.0;
}

/// Per-channel planar error model  a + b*xn + c*yn.
struct PhotometricModel {
  std::array<std::array<double, 3>, 3> coeffs{};  // [channel][a, b, c]
  double rms_residual = 0.0;
  std::size_t sample_count = 0;

  double evaluate(int channel, double xn, double yn) const {
    const auto& k = coeffs[channel];
    return k[0] + k[1] * xn + k[2] * yn;
  }

  bool is_zero() const {
    for (const auto& k : coeffs) {
      for (double v : k) {
        if (v != 0.0) return false;
      }
    }
    return true;
  }
};

inline constexpr std::size_t kDefaultMinSamples = 32;
inline constexpr double kDefaultGateTau = 0.05;

/// Ordinary least squares of each channel of `e` over `m_e` against
/// {1, xn, yn}. Too few samples gives the zero model; a collinear band
/// falls back to a mean-only fit.
inline PhotometricModel fit_photometric(const Frame& e, const Mask& m_e,
                                        std::size_t min_samples = kDefaultMinSamples) {
  require_same_geometry(e, m_e, "fit_photometric");
  PhotometricModel model;
  const int w = e.width();
  const int h = e.height();

  std::size_t n = 0;
  double sx = 0.0, sy = 0.0;
  std::array<double, 3> se{};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m_e.at(x, y)) continue;
      ++n;
      sx += normalized_coord(x, w);
      sy += normalized_coord(y, h);
      for (int c = 0; c < 3; ++c) se[c] += e.at(x, y, c);
    }
  }
  model.sample_count = n;
  if (n < min_samples || n == 0) return model;

  const double mx = sx / n;
  const double my = sy / n;
  std::array<double, 3> me{};
  for (int c = 0; c < 3; ++c) me[c] = se[c] / n;

  // Centred normal equations for the slope terms.
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  std::array<double, 3> sxe{}, sye{};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m_e.at(x, y)) continue;
      const double dx = normalized_coord(x, w) - mx;
      const double dy = normalized_coord(y, h) - my;
      sxx += dx * dx;
      syy += dy * dy;
      sxy += dx * dy;
      for (int c = 0; c < 3; ++c) {
        const double de = e.at(x, y, c) - me[c];
        sxe[c] += dx * de;
        sye[c] += dy * de;
      }
    }
  }
  const double det = sxx * syy - sxy * sxy;
  const bool planar = det > 1e-12 * std::max(1.0, sxx * syy);
  for (int c = 0; c < 3; ++c) {
    double b = 0.0, cc = 0.0;
    if (planar) {
      b = (syy * sxe[c] - sxy * sye[c]) / det;
      cc = (sxx * sye[c] - sxy * sxe[c]) / det;
    }
    model.coeffs[c] = {me[c] - b * mx - cc * my, b, cc};
  }

  double sq = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!m_e.at(x, y)) continue;
      const double xn = normalized_coord(x, w);
      const double yn = normalized_coord(y, h);
      for (int c = 0; c < 3; ++c) {
        const double r = e.at(x, y, c) - model.evaluate(c, xn, yn);
        sq += r * r;
      }
    }
  }
  model.rms_residual = std::sqrt(sq / (3.0 * n));
  return model;
}

/// Accepts the latest reference's writes and subtracts the modelled error
/// from them, or rejects them when the fit residual exceeds `tau`.
///
/// Rejection returns the written hole pixels to `remaining` and restores the
/// input samples at every pixel the reference touched.
inline bool apply_compensation(PropagationState& s, const PhotometricModel& model,
                               double tau = kDefaultGateTau) {
  const int w = s.input.width();
  const int h = s.input.height();
  const bool accept = model.rms_residual <= tau;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool hole_write = s.new_writes.at(x, y) != 0;
      const bool band_write = s.err_mask.at(x, y) != 0;
      if (!hole_write && !band_write) continue;
      if (accept) {
        if (model.is_zero()) continue;
        const double xn = normalized_coord(x, w);
        const double yn = normalized_coord(y, h);
        for (int c = 0; c < 3; ++c) {
          const double correction = model.evaluate(c, xn, yn);
          s.overfilled.at(x, y, c) =
              std::clamp(s.overfilled.at(x, y, c) - correction, 0.0, 1.0);
          if (hole_write) {
            s.filled.at(x, y, c) = std::clamp(s.filled.at(x, y, c) - correction, 0.0, 1.0);
          }
        }
      } else {
        for (int c = 0; c < 3; ++c) {
          s.overfilled.at(x, y, c) = s.input.at(x, y, c);
          if (hole_write) s.filled.at(x, y, c) = s.input.at(x, y, c);
        }
        if (hole_write) {
          s.remaining.at(x, y) = 1;
          s.prop_mask.at(x, y) = 0;
        }
      }
    }
  }
  if (!accept) s.new_writes = Mask(w, h);
  return accept;
}

struct CompensationConfig {
  bool enabled = true;
  double tau = kDefaultGateTau;
  std::size_t min_samples = kDefaultMinSamples;
};

struct CompensationReport {
  ErrorGuidance guidance;
  PhotometricModel model;
  bool accepted = true;
};

/// Error-guided compensation of one propagation step: measure the error map
/// on the band, fit the planar model, then gate and correct.
class PlanarCompensator {
 public:
  PlanarCompensator() = default;
  explicit PlanarCompensator(CompensationConfig cfg) : cfg_(cfg) {}

  const CompensationConfig& config() const { return cfg_; }

  CompensationReport operator()(PropagationState& state, const Frame& original) const {
    CompensationReport report;
    report.guidance = compute_error_guidance(state, original);
    if (!cfg_.enabled) return report;
    report.model = fit_photometric(report.guidance.error, report.guidance.mask, cfg_.min_samples);
    report.accepted = apply_compensation(state, report.model, cfg_.tau);
    return report;
  }

 private:
  CompensationConfig cfg_;
};

}  // namespace flowpatch
