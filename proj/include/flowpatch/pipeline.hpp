#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "flowpatch/compensation.hpp"
#include "flowpatch/flow_completion.hpp"
#include "flowpatch/parallel.hpp"
#include "flowpatch/propagation.hpp"
#include "flowpatch/synthesis.hpp"

namespace flowpatch {

struct InpaintConfig {
  FlowCompletionConfig flow;
  PropagationConfig propagation;
  CompensationConfig compensation;
  SynthesisConfig synthesis;

  void set_threads(int n) {
    flow.threads = n;
    propagation.threads = n;
  }
};

struct InpaintResult {
  std::vector<Frame> frames;
  /// Pixels no reference could fill, before synthesis.
  std::vector<Mask> remaining;
  std::vector<TargetReport> reports;
};

/// Completed flows, then propagation with compensation, then synthesis.
inline InpaintResult inpaint(const Sequence& seq, const CompletedFlows& flows,
                             const InpaintConfig& cfg, const DiagnosticHook& hook = {}) {
  PropagationResult prop =
      run_propagation(seq, flows, PlanarCompensator(cfg.compensation), cfg.propagation, hook);
  InpaintResult out;
  out.frames.resize(prop.frames.size());
  parallel_for(static_cast<int>(prop.frames.size()), cfg.propagation.threads, [&](int t) {
    out.frames[t] = diffuse_fill(prop.frames[t], prop.remaining[t], cfg.synthesis);
  });
  out.remaining = std::move(prop.remaining);
  out.reports = std::move(prop.reports);
  return out;
}

inline InpaintResult inpaint(const Sequence& seq, const InpaintConfig& cfg,
                             const std::optional<std::filesystem::path>& external_flows = {},
                             const DiagnosticHook& hook = {}) {
  return inpaint(seq, build_completed_flows(seq, cfg.flow, external_flows), cfg, hook);
}

}  // namespace flowpatch
