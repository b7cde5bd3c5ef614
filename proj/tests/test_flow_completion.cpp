#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "flowpatch/flow_completion.hpp"
#include "flowpatch/metrics.hpp"
#include "support.hpp"

namespace fp = flowpatch;
namespace tst = flowpatch::testing;

namespace {

fp::Sequence static_sequence(const fp::Frame& frame, int length) {
  fp::Sequence s;
  for (int t = 0; t < length; ++t) {
    s.frames.push_back(frame);
    s.masks.emplace_back(frame.width(), frame.height());
  }
  return s;
}

fp::Mask interior_random_mask(std::mt19937_64& rng, int w, int h, double density) {
  fp::Mask m(w, h);
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) m.at(x, y) = tst::uniform01(rng) < density ? 1 : 0;
  }
  return m;
}

}  // namespace

TEST(LocalTemporalFill, CopiesFromEarlierFrameOnTie) {
  std::mt19937_64 rng(2);
  fp::Sequence seq;
  for (int t = 0; t < 5; ++t) {
    seq.frames.push_back(tst::random_frame(rng, 8, 8));  // distinct per frame
    seq.masks.emplace_back(8, 8);
  }
  seq.masks[2].at(3, 4) = 1;
  const fp::Frame out = fp::local_temporal_fill(seq, 2, 5);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(out.at(3, 4, c), seq.frames[1].at(3, 4, c));
  }
}

TEST(LocalTemporalFill, SkipsMaskedNeighbours) {
  std::mt19937_64 rng(4);
  fp::Sequence seq;
  for (int t = 0; t < 5; ++t) {
    seq.frames.push_back(tst::random_frame(rng, 6, 6));
    seq.masks.emplace_back(6, 6);
  }
  for (int t : {1, 2}) seq.masks[t].at(2, 2) = 1;
  // Nearest valid: t=3 (distance 1) beats t=0 (distance 2).
  const fp::Frame out = fp::local_temporal_fill(seq, 2, 5);
  EXPECT_EQ(out.at(2, 2, 0), seq.frames[3].at(2, 2, 0));
}

TEST(LocalTemporalFill, MaskedEverywhereFallsBackToHarmonic) {
  fp::Sequence seq = static_sequence(tst::constant_frame(9, 9, 0.5), 11);
  for (auto& m : seq.masks) m.at(4, 4) = 1;
  for (auto& f : seq.frames) {
    for (int c = 0; c < 3; ++c) f.at(4, 4, c) = 0.0;
  }
  const fp::Frame out = fp::local_temporal_fill(seq, 5, 5);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(out.at(4, 4, c), 0.5, 1e-9);
}

TEST(LocalTemporalFill, RadiusLimitsWindow) {
  fp::Sequence seq = static_sequence(tst::constant_frame(5, 5, 0.3), 8);
  seq.frames[0] = tst::constant_frame(5, 5, 0.9);
  for (int t = 1; t < 8; ++t) seq.masks[t].at(2, 2) = 1;
  // Frame 7 with radius 5 cannot see frame 0; the pixel is filled from the
  // 0.3 surround instead of copying 0.9.
  const fp::Frame out = fp::local_temporal_fill(seq, 7, 5);
  EXPECT_NEAR(out.at(2, 2, 0), 0.3, 1e-9);
  const fp::Frame wide = fp::local_temporal_fill(seq, 7, 7);
  EXPECT_DOUBLE_EQ(wide.at(2, 2, 0), 0.9);
}

TEST(LocalTemporalFill, NoHolesIsIdentity) {
  std::mt19937_64 rng(6);
  fp::Sequence seq;
  for (int t = 0; t < 3; ++t) {
    seq.frames.push_back(tst::random_frame(rng, 7, 5));
    seq.masks.emplace_back(7, 5);
  }
  EXPECT_EQ(fp::local_temporal_fill(seq, 1, 5), seq.frames[1]);
}

TEST(LocalTemporalFill, IndexOutOfRange) {
  fp::Sequence seq = static_sequence(fp::Frame(4, 4), 2);
  EXPECT_THROW(fp::local_temporal_fill(seq, 2, 5), fp::Error);
  EXPECT_THROW(fp::local_temporal_fill(seq, -1, 5), fp::Error);
}

// Property: valid pixels are never altered.
TEST(LocalTemporalFill, ValidPixelsUnchanged) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    fp::Sequence seq;
    for (int t = 0; t < 6; ++t) {
      seq.frames.push_back(tst::random_frame(rng, 10, 10));
      seq.masks.push_back(interior_random_mask(rng, 10, 10, 0.3));
    }
    const int t = static_cast<int>(rng() % 6);
    const fp::Frame out = fp::local_temporal_fill(seq, t, 2);
    for (int y = 0; y < 10; ++y) {
      for (int x = 0; x < 10; ++x) {
        if (seq.masks[t].at(x, y)) continue;
        for (int c = 0; c < 3; ++c) ASSERT_EQ(out.at(x, y, c), seq.frames[t].at(x, y, c));
      }
    }
  }
}

TEST(CompleteFlow, ConstantFlowStaysConstant) {
  std::mt19937_64 rng(10);
  fp::FlowField flow(20, 16, 2.0, -1.0);
  const fp::Mask hole = tst::rect_mask(20, 16, 5, 4, 7, 6);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 20; ++x) {
      if (hole.at(x, y)) flow.u(x, y) = flow.v(x, y) = 99.0;  // garbage inside
    }
  }
  const fp::GuidedSolveConfig cfg;
  const auto out = fp::complete_flow(flow, hole, tst::random_frame(rng, 20, 16), cfg);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 20; ++x) {
      ASSERT_NEAR(out.u(x, y), 2.0, cfg.tol);
      ASSERT_NEAR(out.v(x, y), -1.0, cfg.tol);
    }
  }
}

TEST(CompleteFlow, AffineFieldRecoveredWithoutGuide) {
  const int w = 24, h = 20;
  fp::FlowField flow(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) flow.u(x, y) = 0.1 * x + 0.2 * y;
  }
  const fp::Mask hole = tst::rect_mask(w, h, 6, 5, 10, 9);
  fp::FlowField corrupted = flow;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (hole.at(x, y)) corrupted.u(x, y) = 0.0;
    }
  }
  fp::GuidedSolveConfig cfg;
  cfg.beta = 0.0;
  const auto out = fp::complete_flow(corrupted, hole, fp::Frame(w, h), cfg);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!hole.at(x, y)) continue;
      // Oracle: direct evaluation of the affine field.
      ASSERT_NEAR(out.u(x, y), 0.1 * x + 0.2 * y, 10 * cfg.tol);
      ASSERT_NEAR(out.v(x, y), 0.0, 10 * cfg.tol);
    }
  }
}

TEST(CompleteFlow, MatchesDenseSolveOnSmallRaster) {
  std::mt19937_64 rng(12);
  fp::FlowField flow(8, 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      flow.u(x, y) = 10 * tst::uniform01(rng) - 5;
      flow.v(x, y) = 10 * tst::uniform01(rng) - 5;
    }
  }
  const fp::Mask hole = interior_random_mask(rng, 8, 8, 0.6);
  fp::GuidedSolveConfig cfg;
  cfg.beta = 0.0;
  cfg.tol = 1e-10;
  const auto out = fp::complete_flow(flow, hole, fp::Frame(8, 8), cfg);
  for (int c = 0; c < 2; ++c) {
    const auto oracle = tst::dense_harmonic(flow.vectors(), hole, c);
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) ASSERT_NEAR(out.vectors().at(x, y, c), oracle[y * 8 + x], 1e-8);
    }
  }
}

// Property: outside the hole nothing changes, and every flag becomes valid.
TEST(CompleteFlow, OutsideHoleUntouched) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    fp::FlowField flow(12, 12);
    for (int y = 0; y < 12; ++y) {
      for (int x = 0; x < 12; ++x) {
        flow.u(x, y) = tst::uniform01(rng);
        flow.v(x, y) = tst::uniform01(rng);
        if (tst::uniform01(rng) < 0.1) flow.set_valid(x, y, false);
      }
    }
    const fp::Mask hole = interior_random_mask(rng, 12, 12, 0.4);
    const auto out = fp::complete_flow(flow, hole, tst::random_frame(rng, 12, 12), {});
    for (int y = 0; y < 12; ++y) {
      for (int x = 0; x < 12; ++x) {
        ASSERT_TRUE(out.valid(x, y));
        if (hole.at(x, y)) continue;
        ASSERT_EQ(out.u(x, y), flow.u(x, y));
        ASSERT_EQ(out.v(x, y), flow.v(x, y));
      }
    }
  }
}

TEST(CompleteFlow, GuideEdgeBlocksDiffusion) {
  // Left half flows (1,0), right half (-1,0); the guide has an edge at the
  // same place. With a strong beta the hole straddling the edge keeps the
  // two motions apart instead of averaging them.
  const int w = 20, h = 10;
  fp::FlowField flow(w, h);
  fp::Frame guide(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      flow.u(x, y) = x < 10 ? 1.0 : -1.0;
      for (int c = 0; c < 3; ++c) guide.at(x, y, c) = x < 10 ? 0.1 : 0.9;
    }
  }
  const fp::Mask hole = tst::rect_mask(w, h, 6, 3, 8, 4);
  fp::GuidedSolveConfig cfg;
  cfg.beta = 10.0;
  const auto out = fp::complete_flow(flow, hole, guide, cfg);
  EXPECT_NEAR(out.u(7, 5), 1.0, 0.01);
  EXPECT_NEAR(out.u(12, 5), -1.0, 0.01);
}

TEST(CompleteFlow, FullyMaskedIsUnsolvable) {
  EXPECT_THROW(fp::complete_flow(fp::FlowField(6, 6), fp::Mask(6, 6, 1), fp::Frame(6, 6), {}),
               fp::Error);
}

TEST(CompleteFlow, ConfigValidation) {
  fp::GuidedSolveConfig cfg;
  cfg.tol = 1.5;
  EXPECT_THROW(fp::complete_flow(fp::FlowField(4, 4), fp::Mask(4, 4), fp::Frame(4, 4), cfg),
               fp::Error);
  cfg = {};
  cfg.max_iter = 0;
  EXPECT_THROW(cfg.validate(), fp::Error);
  cfg = {};
  cfg.beta = -1;
  EXPECT_THROW(cfg.validate(), fp::Error);
}

TEST(BlockMatch, IdenticalFramesGiveZeroFlow) {
  std::mt19937_64 rng(20);
  const fp::Frame a = tst::random_frame(rng, 32, 32);
  const auto f = fp::estimate_flow_blockmatch(a, a, 3, 5);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      ASSERT_EQ(f.u(x, y), 0.0);
      ASSERT_EQ(f.v(x, y), 0.0);
    }
  }
}

TEST(BlockMatch, RecoversIntegerShift) {
  std::mt19937_64 rng(21);
  const fp::Frame canvas = tst::random_frame(rng, 52, 48);
  fp::Frame a(48, 48), b(48, 48);
  for (int y = 0; y < 48; ++y) {
    for (int x = 0; x < 48; ++x) {
      for (int c = 0; c < 3; ++c) {
        a.at(x, y, c) = canvas.at(x + 2, y, c);
        b.at(x, y, c) = canvas.at(x, y, c);  // b(p + (2,0)) = a(p)
      }
    }
  }
  const auto f = fp::estimate_flow_blockmatch(a, b, 3, 5);
  std::vector<double> us, vs;
  for (int y = 0; y < 48; ++y) {
    for (int x = 0; x < 48; ++x) {
      us.push_back(f.u(x, y));
      vs.push_back(f.v(x, y));
    }
  }
  std::nth_element(us.begin(), us.begin() + us.size() / 2, us.end());
  std::nth_element(vs.begin(), vs.begin() + vs.size() / 2, vs.end());
  EXPECT_EQ(us[us.size() / 2], 2.0);
  EXPECT_EQ(vs[vs.size() / 2], 0.0);
}

TEST(BlockMatch, TexturelessTieBreaksToZero) {
  const fp::Frame a = tst::constant_frame(40, 40, 0.4);
  const auto f = fp::estimate_flow_blockmatch(a, a, 2, 3);
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 40; ++x) {
      ASSERT_EQ(f.u(x, y), 0.0);
      ASSERT_EQ(f.v(x, y), 0.0);
    }
  }
}

TEST(BlockMatch, RejectsBadParameters) {
  const fp::Frame a(8, 8);
  EXPECT_THROW(fp::estimate_flow_blockmatch(a, a, 2, 4), fp::Error);
  EXPECT_THROW(fp::estimate_flow_blockmatch(a, a, 0, 3), fp::Error);
  EXPECT_THROW(fp::estimate_flow_blockmatch(a, fp::Frame(8, 9), 2, 3), fp::Error);
}

TEST(BuildCompletedFlows, NoHolesKeepsInputFlows) {
  std::mt19937_64 rng(30);
  const fp::Sequence seq = static_sequence(tst::random_frame(rng, 24, 24), 2);
  auto dir = tst::scratch_dir("bcf_ext");
  fp::FlowField fwd(24, 24, 0.75, -0.5), bwd(24, 24, -0.75, 0.5);
  fp::write_flo(fwd, fp::flow_file(dir, 0, true));
  fp::write_flo(bwd, fp::flow_file(dir, 0, false));
  const auto flows = fp::build_completed_flows(seq, {}, dir);
  ASSERT_EQ(flows.forward.size(), 1u);
  EXPECT_EQ(flows.forward[0], fwd);
  EXPECT_EQ(flows.backward[0], bwd);
}

TEST(BuildCompletedFlows, CountsForThreeFrames) {
  std::mt19937_64 rng(31);
  const fp::Sequence seq = static_sequence(tst::random_frame(rng, 20, 20), 3);
  const auto flows = fp::build_completed_flows(seq, {});
  EXPECT_EQ(flows.forward.size(), 2u);
  EXPECT_EQ(flows.backward.size(), 2u);
}

TEST(BuildCompletedFlows, MissingExternalFileNamed) {
  const fp::Sequence seq = static_sequence(fp::Frame(16, 16), 3);
  auto dir = tst::scratch_dir("bcf_missing");
  fp::write_flo(fp::FlowField(16, 16), fp::flow_file(dir, 0, true));
  fp::write_flo(fp::FlowField(16, 16), fp::flow_file(dir, 0, false));
  fp::write_flo(fp::FlowField(16, 16), fp::flow_file(dir, 1, true));
  try {
    fp::build_completed_flows(seq, {}, dir);
    FAIL() << "expected an error";
  } catch (const fp::Error& e) {
    EXPECT_NE(std::string(e.what()).find("1_bwd.flo"), std::string::npos);
  }
}

TEST(BuildCompletedFlows, ExternalGeometryMismatch) {
  const fp::Sequence seq = static_sequence(fp::Frame(16, 16), 2);
  auto dir = tst::scratch_dir("bcf_geom");
  fp::write_flo(fp::FlowField(16, 15), fp::flow_file(dir, 0, true));
  fp::write_flo(fp::FlowField(16, 16), fp::flow_file(dir, 0, false));
  EXPECT_THROW(fp::build_completed_flows(seq, {}, dir), fp::Error);
}

TEST(BuildCompletedFlows, CompletionHoleIsUnionOfMasks) {
  // External flows are garbage in both frames' holes; completion must
  // repair both regions, not just one.
  const int w = 32, h = 32;
  const fp::Sequence base = static_sequence(tst::constant_frame(w, h, 0.5), 2);
  fp::Sequence seq = base;
  seq.masks[0] = tst::rect_mask(w, h, 4, 4, 6, 6);
  seq.masks[1] = tst::rect_mask(w, h, 20, 20, 6, 6);
  auto dir = tst::scratch_dir("bcf_union");
  fp::FlowField fwd(w, h, 1.0, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (seq.masks[0].at(x, y) || seq.masks[1].at(x, y)) fwd.u(x, y) = 50.0;
    }
  }
  fp::write_flo(fwd, fp::flow_file(dir, 0, true));
  fp::write_flo(fwd, fp::flow_file(dir, 0, false));
  const auto flows = fp::build_completed_flows(seq, {}, dir);
  const fp::FlowField truth(w, h, 1.0, 0.0);
  EXPECT_LT(fp::flow_epe(flows.forward[0], truth), 1e-3);
  EXPECT_LT(fp::flow_epe(flows.backward[0], truth), 1e-3);
}

TEST(BuildCompletedFlows, DeterministicAcrossThreadCounts) {
  std::mt19937_64 rng(33);
  fp::Sequence seq;
  for (int t = 0; t < 4; ++t) {
    seq.frames.push_back(tst::random_frame(rng, 24, 24));
    seq.masks.push_back(tst::rect_mask(24, 24, 8 + t, 8, 5, 5));
  }
  fp::FlowCompletionConfig one;
  fp::FlowCompletionConfig many;
  many.threads = 4;
  const auto a = fp::build_completed_flows(seq, one);
  const auto b = fp::build_completed_flows(seq, many);
  for (std::size_t i = 0; i < a.forward.size(); ++i) {
    EXPECT_EQ(a.forward[i], b.forward[i]);
    EXPECT_EQ(a.backward[i], b.backward[i]);
  }
}
