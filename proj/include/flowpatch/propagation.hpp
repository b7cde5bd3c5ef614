#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "flowpatch/compensation.hpp"
#include "flowpatch/flow_completion.hpp"
#include "flowpatch/geometry.hpp"
#include "flowpatch/parallel.hpp"
#include "flowpatch/raster.hpp"
#include "flowpatch/state.hpp"

namespace flowpatch {

/// Reference order for target t: t-1, t+1, t-2, t+2, ... within [0, T).
inline std::vector<int> plan_references(int t, int length) {
  std::vector<int> order;
  if (t < 0 || t >= length) return order;
  order.reserve(static_cast<std::size_t>(length) - 1);
  for (int d = 1; t - d >= 0 || t + d < length; ++d) {
    if (t - d >= 0) order.push_back(t - d);
    if (t + d < length) order.push_back(t + d);
  }
  return order;
}

/// Folds one reference into the state.
///
/// Hole pixels still in `remaining` whose warped reference sample is clean
/// are written once and never again. Band pixels take this reference's
/// sample unconditionally, since the band measures this reference's error.
inline PropagationState propagate_once(PropagationState state, const Frame& ref_frame,
                                       const Mask& ref_mask, const FlowField& flow_ij) {
  require_same_geometry(state.input, ref_frame, "propagate_once");
  require_same_geometry(state.input, ref_mask, "propagate_once");
  require_same_geometry(state.input, flow_ij, "propagate_once");

  const WarpResult warped = backward_warp(ref_frame, flow_ij);
  const Mask clean = warped_validity(ref_mask, flow_ij);
  const int w = state.input.width();
  const int h = state.input.height();
  state.err_mask = Mask(w, h);
  state.new_writes = Mask(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!warped.inbounds.at(x, y) || !clean.at(x, y)) continue;
      if (state.hole.at(x, y)) {
        if (!state.remaining.at(x, y)) continue;
        for (int c = 0; c < 3; ++c) {
          state.filled.at(x, y, c) = warped.image.at(x, y, c);
          state.overfilled.at(x, y, c) = warped.image.at(x, y, c);
        }
        state.remaining.at(x, y) = 0;
        state.prop_mask.at(x, y) = 1;
        state.new_writes.at(x, y) = 1;
      } else if (state.dilated_hole.at(x, y)) {
        for (int c = 0; c < 3; ++c) state.overfilled.at(x, y, c) = warped.image.at(x, y, c);
        state.err_mask.at(x, y) = 1;
      }
    }
  }
  return state;
}

/// Compensator that accepts every step unchanged.
struct NoCompensation {
  CompensationReport operator()(PropagationState& state, const Frame& original) const {
    CompensationReport report;
    report.guidance = compute_error_guidance(state, original);
    return report;
  }
};

struct PropagationConfig {
  int dilation = kDefaultDilation;
  int threads = 1;
};

struct IterationRecord {
  int reference = 0;
  std::size_t written = 0;       // hole pixels written before the gate
  std::size_t band_samples = 0;
  bool accepted = true;
  PhotometricModel model;
};

struct TargetReport {
  std::vector<IterationRecord> iterations;
};

/// Called after each reference step: (target, step, reference, state, report).
/// Invoked from worker threads when threads > 1; distinct targets never share
/// a call concurrently with the same target index.
using DiagnosticHook = std::function<void(int, int, int, const PropagationState&,
                                          const CompensationReport&)>;

struct PropagationResult {
  std::vector<Frame> frames;
  std::vector<Mask> remaining;
  std::vector<TargetReport> reports;
};

/// Flow from `target` to `reference` built by chaining adjacent flows,
/// extending `cached` (target -> reference -/+ 1) when given.
inline FlowField chain_flow(const CompletedFlows& flows, int target, int reference,
                            const FlowField* cached) {
  if (reference > target) {
    const FlowField& step = flows.forward[reference - 1];
    return cached ? compose_flows(*cached, step) : step;
  }
  const FlowField& step = flows.backward[reference];
  return cached ? compose_flows(*cached, step) : step;
}

/// Propagation and compensation for a single target frame.
template <typename Compensator>
PropagationState propagate_target(const Sequence& seq, const CompletedFlows& flows, int t,
                                  const Compensator& compensate, const PropagationConfig& cfg,
                                  TargetReport* report = nullptr,
                                  const DiagnosticHook& hook = {}) {
  PropagationState state = PropagationState::start(seq.frames[t], seq.masks[t], cfg.dilation);
  std::optional<FlowField> to_prev, to_next;  // cached chains toward each side
  int step = 0;
  for (int j : plan_references(t, seq.length())) {
    if (!any(state.remaining)) break;
    std::optional<FlowField>& cache = j < t ? to_prev : to_next;
    cache = chain_flow(flows, t, j, cache ? &*cache : nullptr);

    state = propagate_once(std::move(state), seq.frames[j], seq.masks[j], *cache);
    IterationRecord rec;
    rec.reference = j;
    rec.written = count(state.new_writes);
    rec.band_samples = count(state.err_mask);
    const CompensationReport comp = compensate(state, seq.frames[t]);
    rec.accepted = comp.accepted;
    rec.model = comp.model;
    if (hook) hook(t, step, j, state, comp);
    if (report) report->iterations.push_back(rec);
    ++step;
  }
  return state;
}

/// Runs propagation with compensation over every target independently.
///
/// Output frames equal the input outside the original hole; inside it they
/// hold the compensated propagated samples, or the input where `remaining`
/// is still set.
template <typename Compensator>
PropagationResult run_propagation(const Sequence& seq, const CompletedFlows& flows,
                                  const Compensator& compensate,
                                  const PropagationConfig& cfg = {},
                                  const DiagnosticHook& hook = {}) {
  seq.validate();
  const int length = seq.length();
  if (static_cast<int>(flows.forward.size()) != length - 1 ||
      static_cast<int>(flows.backward.size()) != length - 1) {
    throw Error("run_propagation: expected " + std::to_string(length - 1) +
                " flow pairs, got " + std::to_string(flows.forward.size()));
  }
  PropagationResult out;
  out.frames.resize(length);
  out.remaining.resize(length);
  out.reports.resize(length);
  parallel_for(length, cfg.threads, [&](int t) {
    PropagationState state =
        propagate_target(seq, flows, t, compensate, cfg, &out.reports[t], hook);
    Frame result = seq.frames[t];
    for (int y = 0; y < result.height(); ++y) {
      for (int x = 0; x < result.width(); ++x) {
        if (!state.prop_mask.at(x, y)) continue;
        for (int c = 0; c < 3; ++c) result.at(x, y, c) = state.overfilled.at(x, y, c);
      }
    }
    out.frames[t] = std::move(result);
    out.remaining[t] = std::move(state.remaining);
  });
  return out;
}

}  // namespace flowpatch
