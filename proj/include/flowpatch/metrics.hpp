#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <optional>
#include <ostream>
#include <vector>

#include "flowpatch/raster.hpp"

namespace flowpatch {

inline constexpr double kPsnrCap = 99.0;

/// Peak signal-to-noise ratio in dB for unit peak, channels pooled.
/// Identical inputs return kPsnrCap; results never exceed it.
inline double psnr(const Frame& a, const Frame& b, const Mask* region = nullptr) {
  require_same_geometry(a, b, "psnr");
  if (region) require_same_geometry(a, *region, "psnr region");
  double sq = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (region && !region->at(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        const double d = a.at(x, y, c) - b.at(x, y, c);
        sq += d * d;
      }
      n += 3;
    }
  }
  if (n == 0) throw Error("psnr: empty region");
  const double mse = sq / n;
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

namespace detail {

inline constexpr int kSsimWindow = 11;

inline std::array<double, kSsimWindow> ssim_kernel() {
  std::array<double, kSsimWindow> k{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    k[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable Gaussian filter over the fully-overlapping ("valid") positions.
inline std::vector<double> filter_valid(const std::vector<double>& img, int w, int h) {
  static const auto k = ssim_kernel();
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) acc += k[i] * img[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) acc += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace detail

/// Mean structural similarity: 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range 1, averaged over channels.
inline double ssim(const Frame& a, const Frame& b) {
  require_same_geometry(a, b, "ssim");
  const int w = a.width();
  const int h = a.height();
  if (w < detail::kSsimWindow || h < detail::kSsimWindow) {
    throw Error("ssim: raster smaller than the 11x11 window");
  }
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const std::size_t n = a.pixel_count();
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> pa(n), pb(n), aa(n), bb(n), ab(n);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        pa[i] = a.at(x, y, c);
        pb[i] = b.at(x, y, c);
        aa[i] = pa[i] * pa[i];
        bb[i] = pb[i] * pb[i];
        ab[i] = pa[i] * pb[i];
      }
    }
    const auto mu1 = detail::filter_valid(pa, w, h);
    const auto mu2 = detail::filter_valid(pb, w, h);
    const auto e11 = detail::filter_valid(aa, w, h);
    const auto e22 = detail::filter_valid(bb, w, h);
    const auto e12 = detail::filter_valid(ab, w, h);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu1.size(); ++i) {
      const double m12 = mu1[i] * mu2[i];
      const double s1 = e11[i] - mu1[i] * mu1[i];
      const double s2 = e22[i] - mu2[i] * mu2[i];
      const double s12 = e12[i] - m12;
      sum += ((2.0 * m12 + c1) * (2.0 * s12 + c2)) /
             ((mu1[i] * mu1[i] + mu2[i] * mu2[i] + c1) * (s1 + s2 + c2));
    }
    total += sum / static_cast<double>(mu1.size());
  }
  return total / 3.0;
}

/// Mean end-point error over `region` (default: every pixel).
inline double flow_epe(const FlowField& f, const FlowField& ref, const Mask* region = nullptr) {
  require_same_geometry(f, ref, "flow_epe");
  if (region) require_same_geometry(f, *region, "flow_epe region");
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      if (region && !region->at(x, y)) continue;
      sum += std::hypot(f.u(x, y) - ref.u(x, y), f.v(x, y) - ref.v(x, y));
      ++n;
    }
  }
  if (n == 0) throw Error("flow_epe: empty region");
  return sum / static_cast<double>(n);
}

/// Stacks scan line `row` of every frame: output is T rows by W columns.
inline Frame temporal_profile(const std::vector<Frame>& frames, int row) {
  if (frames.empty()) throw Error("temporal_profile: no frames");
  const Frame& first = frames.front();
  if (row < 0 || row >= first.height()) {
    throw Error("temporal_profile: row " + std::to_string(row) + " out of range");
  }
  Frame out(first.width(), static_cast<int>(frames.size()));
  for (std::size_t t = 0; t < frames.size(); ++t) {
    require_same_geometry(frames[t], first, "temporal_profile");
    for (int x = 0; x < first.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, static_cast<int>(t), c) = frames[t].at(x, row, c);
    }
  }
  return out;
}

struct FrameScore {
  int frame = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MetricsSummary {
  std::vector<FrameScore> rows;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

/// Scores predictions against ground truth frame by frame. With `regions`,
/// PSNR is restricted to each frame's region (frames with an empty region
/// are skipped); SSIM is always full-frame.
inline MetricsSummary evaluate(const std::vector<Frame>& pred, const std::vector<Frame>& gt,
                               const std::vector<Mask>* regions = nullptr) {
  if (pred.size() != gt.size()) {
    throw Error("metrics: count mismatch (" + std::to_string(pred.size()) + " vs " +
                std::to_string(gt.size()) + ")");
  }
  if (regions && regions->size() != pred.size()) {
    throw Error("metrics: region count mismatch");
  }
  MetricsSummary summary;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const Mask* region = regions ? &(*regions)[t] : nullptr;
    if (region && !any(*region)) continue;
    summary.rows.push_back(
        {static_cast<int>(t), psnr(pred[t], gt[t], region), ssim(pred[t], gt[t])});
  }
  if (summary.rows.empty()) throw Error("metrics: nothing to evaluate");
  for (const auto& r : summary.rows) {
    summary.mean_psnr += r.psnr;
    summary.mean_ssim += r.ssim;
  }
  summary.mean_psnr /= static_cast<double>(summary.rows.size());
  summary.mean_ssim /= static_cast<double>(summary.rows.size());
  return summary;
}

/// frame,psnr,ssim rows followed by a "mean" footer row.
inline void write_metrics_csv(std::ostream& os, const MetricsSummary& s) {
  os << "frame,psnr,ssim\n" << std::fixed;
  for (const auto& r : s.rows) {
    os << r.frame << ',' << std::setprecision(4) << r.psnr << ',' << std::setprecision(6)
       << r.ssim << '\n';
  }
  os << "mean," << std::setprecision(4) << s.mean_psnr << ',' << std::setprecision(6)
     << s.mean_ssim << '\n';
  os << std::defaultfloat;
}

/// key=value summary for scripts.
inline void write_metrics_summary(std::ostream& os, const MetricsSummary& s) {
  os << std::fixed << "frames=" << s.rows.size() << '\n'
     << "mean_psnr=" << std::setprecision(4) << s.mean_psnr << '\n'
     << "mean_ssim=" << std::setprecision(6) << s.mean_ssim << '\n'
     << std::defaultfloat;
}

}  // namespace flowpatch
