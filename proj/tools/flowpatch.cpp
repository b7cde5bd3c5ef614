#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowpatch/flowpatch.hpp"

namespace fs = std::filesystem;
namespace fp = flowpatch;

namespace {

struct StageFailure : std::runtime_error {
  StageFailure(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what) {}
};

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw StageFailure(name, e.what());
  }
}

std::string indexed(int i, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05d%s", i, ext);
  return buf;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw fp::Error("cannot create " + dir.string() + ": " + ec.message());
}

std::vector<fp::Frame> read_frames(const fs::path& dir) {
  std::vector<fp::Frame> out;
  for (const auto& p : fp::list_images(dir)) out.push_back(fp::read_frame(p));
  if (out.empty()) throw fp::Error("no images in " + dir.string());
  return out;
}

std::vector<fp::Mask> read_masks(const fs::path& dir) {
  std::vector<fp::Mask> out;
  for (const auto& p : fp::list_images(dir)) out.push_back(fp::read_mask(p));
  if (out.empty()) throw fp::Error("no images in " + dir.string());
  return out;
}

std::ofstream open_text(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw fp::Error("cannot write " + path.string());
  return os;
}

// Knobs shared by inpaint and flow.
struct Knobs {
  int threads = 1;
  int radius = 5;
  int dilation = fp::kDefaultDilation;
  double beta = 10.0;
  double tol = 1e-4;
  int max_iter = 2000;
  double tau = fp::kDefaultGateTau;
  std::size_t min_samples = fp::kDefaultMinSamples;
  int search_radius = 4;
  int patch = 7;

  fp::InpaintConfig config() const {
    stage("args", [&] {
      if (threads < 1) throw fp::Error("thread count must be positive, got " + std::to_string(threads));
    });
    fp::InpaintConfig cfg;
    cfg.flow.solve = {beta, tol, max_iter};
    cfg.flow.temporal_radius = radius;
    cfg.flow.search_radius = search_radius;
    cfg.flow.patch = patch;
    cfg.propagation.dilation = dilation;
    cfg.compensation.tau = tau;
    cfg.compensation.min_samples = min_samples;
    cfg.synthesis = {tol, max_iter};
    cfg.set_threads(threads);
    return cfg;
  }
};

void add_config(CLI::App* cmd, std::string& path) {
  cmd->add_option("--config", path, "key=value file; flags on the command line win");
}

void add_common(CLI::App* cmd, Knobs& k) {
  cmd->add_option("--threads", k.threads,
                  "worker threads (1 = reference path; default FLOWPATCH_THREADS or 1)");
}

void add_flow_knobs(CLI::App* cmd, Knobs& k) {
  cmd->add_option("--radius", k.radius, "temporal window for flow guides")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--beta", k.beta, "guide edge sensitivity")->check(CLI::NonNegativeNumber);
  cmd->add_option("--tol", k.tol, "solver tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", k.max_iter, "solver iteration cap")->check(CLI::PositiveNumber);
  cmd->add_option("--search-radius", k.search_radius, "block-match search radius")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--patch", k.patch, "block-match patch size (odd)")
      ->check(CLI::PositiveNumber);
}

void dump_iteration(const fs::path& dir, int target, int step, int ref,
                    const fp::PropagationState& s, const fp::CompensationReport& r) {
  char stem[64];
  std::snprintf(stem, sizeof stem, "t%05d_s%02d_r%05d_", target, step, ref);
  const std::string base = (dir / stem).string();
  fp::Frame vis = r.guidance.error;
  for (double& v : vis.data()) v += 0.5;
  fp::write_frame(vis, base + "error.png");
  fp::write_mask(r.guidance.mask, base + "err_mask.png");
  fp::write_mask(s.prop_mask, base + "prop_mask.png");
  fp::write_mask(s.remaining, base + "remaining.png");
}

void write_iterations(const fs::path& path, const std::vector<fp::TargetReport>& reports) {
  std::ofstream os = open_text(path);
  os << "target,step,reference,written,band_samples,accepted,rms_residual\n";
  for (std::size_t t = 0; t < reports.size(); ++t) {
    const auto& its = reports[t].iterations;
    for (std::size_t i = 0; i < its.size(); ++i) {
      char rms[32];
      std::snprintf(rms, sizeof rms, "%.6f", its[i].model.rms_residual);
      os << t << ',' << i << ',' << its[i].reference << ',' << its[i].written << ','
         << its[i].band_samples << ',' << (its[i].accepted ? 1 : 0) << ',' << rms << '\n';
    }
  }
}

int run_inpaint(const fs::path& frames, const fs::path& masks, const fs::path& out,
                const std::optional<fs::path>& flows_dir, bool dump, bool no_comp,
                const Knobs& k) {
  fp::InpaintConfig cfg = k.config();
  cfg.compensation.enabled = !no_comp;
  const fp::Sequence seq = stage("load", [&] { return fp::load_sequence(frames, masks); });
  const fp::CompletedFlows flows =
      stage("flow", [&] { return fp::build_completed_flows(seq, cfg.flow, flows_dir); });
  const fs::path diag = out / "diagnostics";
  fp::DiagnosticHook hook;
  if (dump) {
    stage("write", [&] { make_dir(diag); });
    hook = [&](int t, int step, int ref, const fp::PropagationState& s,
               const fp::CompensationReport& r) { dump_iteration(diag, t, step, ref, s, r); };
  }
  fp::PropagationResult prop = stage("propagate", [&] {
    return fp::run_propagation(seq, flows, fp::PlanarCompensator(cfg.compensation),
                               cfg.propagation, hook);
  });
  std::vector<fp::Frame> done(prop.frames.size());
  stage("synthesize", [&] {
    fp::parallel_for(static_cast<int>(done.size()), k.threads, [&](int t) {
      done[t] = fp::diffuse_fill(prop.frames[t], prop.remaining[t], cfg.synthesis);
    });
  });
  stage("write", [&] {
    make_dir(out / "remaining");
    for (std::size_t t = 0; t < done.size(); ++t) {
      fp::write_frame(done[t], out / indexed(static_cast<int>(t), ".png"));
      fp::write_mask(prop.remaining[t], out / "remaining" / indexed(static_cast<int>(t), ".png"));
    }
    if (dump) write_iterations(diag / "iterations.csv", prop.reports);
  });
  return 0;
}

int run_flow(const fs::path& frames, const fs::path& masks, const fs::path& out,
             const std::optional<fs::path>& flows_dir, const Knobs& k) {
  const fp::InpaintConfig cfg = k.config();
  const fp::Sequence seq = stage("load", [&] { return fp::load_sequence(frames, masks); });
  const fp::CompletedFlows flows =
      stage("flow", [&] { return fp::build_completed_flows(seq, cfg.flow, flows_dir); });
  stage("write", [&] {
    make_dir(out);
    for (std::size_t t = 0; t < flows.forward.size(); ++t) {
      fp::write_flo(flows.forward[t], fp::flow_file(out, static_cast<int>(t), true));
      fp::write_flo(flows.backward[t], fp::flow_file(out, static_cast<int>(t), false));
    }
  });
  return 0;
}

int run_genmask(const std::string& kind, const std::string& size, int frames,
                std::uint64_t seed, const fs::path& out) {
  fp::MaskGenConfig cfg;
  cfg.seed = seed;
  int w = 0, h = 0;
  stage("args", [&] {
    if (kind == "stationary") {
      cfg.kind = fp::MaskKind::stationary;
    } else if (kind == "moving") {
      cfg.kind = fp::MaskKind::moving;
    } else {
      throw fp::Error("unknown mask kind '" + kind + "'");
    }
    char x = 0;
    std::istringstream is(size);
    if (!(is >> w >> x >> h) || x != 'x' || !is.eof()) {
      throw fp::Error("size must look like WxH, got '" + size + "'");
    }
  });
  const auto stack = stage("generate", [&] { return fp::gen_masks(cfg, h, w, frames); });
  stage("write", [&] {
    make_dir(out);
    for (std::size_t t = 0; t < stack.size(); ++t) {
      fp::write_mask(stack[t], out / indexed(static_cast<int>(t), ".png"));
    }
  });
  return 0;
}

int run_metrics(const fs::path& pred, const fs::path& gt, const std::optional<fs::path>& masks,
                bool hole_only, const std::optional<fs::path>& csv,
                const std::optional<fs::path>& summary_path) {
  std::vector<fp::Frame> p, g;
  std::vector<fp::Mask> regions;
  stage("load", [&] {
    if (hole_only && !masks) throw fp::Error("--hole-only needs --masks");
    p = read_frames(pred);
    g = read_frames(gt);
    if (hole_only) regions = read_masks(*masks);
  });
  const fp::MetricsSummary s =
      stage("metrics", [&] { return fp::evaluate(p, g, hole_only ? &regions : nullptr); });
  stage("write", [&] {
    if (csv) {
      std::ofstream os = open_text(*csv);
      fp::write_metrics_csv(os, s);
    }
    if (summary_path) {
      std::ofstream os = open_text(*summary_path);
      fp::write_metrics_summary(os, s);
    }
  });
  fp::write_metrics_csv(std::cout, s);
  return 0;
}

int run_profile(const fs::path& frames, int row, const fs::path& out) {
  const auto f = stage("load", [&] { return read_frames(frames); });
  const fp::Frame prof = stage("profile", [&] { return fp::temporal_profile(f, row); });
  stage("write", [&] {
    if (out.has_parent_path()) make_dir(out.parent_path());
    fp::write_frame(prof, out);
  });
  return 0;
}

// Config keys become "--key=value" tokens ahead of the user's own flags, so
// with last-wins options the command line overrides the file.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path || args.empty()) return args;
  std::ifstream in(*path);
  if (!in) throw CLI::FileError::Missing(*path);
  std::vector<std::string> out{args.front()};
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_config(in)) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    std::string token = "--" + item.name + "=";
    for (std::size_t i = 0; i < item.inputs.size(); ++i) token += (i ? " " : "") + item.inputs[i];
    out.push_back(token);
  }
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow-guided video inpainting with error compensation"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Knobs knobs;
  if (const char* env = std::getenv("FLOWPATCH_THREADS"); env && *env) {
    try {
      std::size_t used = 0;
      knobs.threads = std::stoi(env, &used);
      if (env[used] != '\0') throw std::invalid_argument(env);
    } catch (const std::exception&) {
      std::cerr << "flowpatch args: FLOWPATCH_THREADS is not an integer: " << env << '\n';
      return 2;
    }
  }
  fs::path frames, masks, out, pred, gt;
  std::optional<fs::path> flows_dir, metric_masks, csv, summary;
  bool dump = false, no_comp = false, hole_only = false;
  std::string kind = "stationary", size;
  int count = 0, row = 0;
  std::uint64_t seed = 0;
  std::string config;

  auto* inpaint = app.add_subcommand("inpaint", "complete masked regions of a frame sequence");
  add_config(inpaint, config);
  add_common(inpaint, knobs);
  inpaint->add_option("--frames", frames, "frame directory")->required();
  inpaint->add_option("--masks", masks, "mask directory")->required();
  inpaint->add_option("--out", out, "output directory")->required();
  inpaint->add_option("--flows", flows_dir, "directory of precomputed .flo files");
  inpaint->add_flag("--dump-diagnostics", dump, "write error maps and mask snapshots");
  inpaint->add_flag("--no-compensation", no_comp, "propagate without error compensation");
  add_flow_knobs(inpaint, knobs);
  inpaint->add_option("--dilation", knobs.dilation, "hole dilation kernel (odd)")
      ->check(CLI::PositiveNumber);
  inpaint->add_option("--tau", knobs.tau, "compensation gate on residual RMS")
      ->check(CLI::NonNegativeNumber);
  inpaint->add_option("--min-samples", knobs.min_samples, "band samples needed for a fit");

  auto* flow = app.add_subcommand("flow", "write completed forward and backward flows");
  add_config(flow, config);
  add_common(flow, knobs);
  flow->add_option("--frames", frames, "frame directory")->required();
  flow->add_option("--masks", masks, "mask directory")->required();
  flow->add_option("--out", out, "output directory")->required();
  flow->add_option("--flows", flows_dir, "directory of precomputed .flo files");
  add_flow_knobs(flow, knobs);

  auto* genmask = app.add_subcommand("genmask", "generate a mask stack");
  add_config(genmask, config);
  genmask->add_option("--kind", kind, "stationary or moving");
  genmask->add_option("--size", size, "WxH")->required();
  genmask->add_option("--frames", count, "number of masks")->required()->check(CLI::PositiveNumber);
  genmask->add_option("--seed", seed, "random seed");
  genmask->add_option("--out", out, "output directory")->required();

  auto* metrics = app.add_subcommand("metrics", "PSNR and SSIM per frame");
  add_config(metrics, config);
  metrics->add_option("--pred", pred, "predicted frames")->required();
  metrics->add_option("--gt", gt, "ground-truth frames")->required();
  metrics->add_option("--masks", metric_masks, "hole masks");
  metrics->add_flag("--hole-only", hole_only, "restrict PSNR to the hole");
  metrics->add_option("--csv", csv, "write the table here too");
  metrics->add_option("--summary", summary, "write key=value means here");

  auto* profile = app.add_subcommand("profile", "temporal profile of one scan line");
  add_config(profile, config);
  profile->add_option("--frames", frames, "frame directory")->required();
  profile->add_option("--row", row, "scan line")->required();
  profile->add_option("--out", out, "output PNG")->required();

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "flowpatch args: " << one_line(e.what()) << '\n';
    return 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (*inpaint) return run_inpaint(frames, masks, out, flows_dir, dump, no_comp, knobs);
    if (*flow) return run_flow(frames, masks, out, flows_dir, knobs);
    if (*genmask) return run_genmask(kind, size, count, seed, out);
    if (*metrics) return run_metrics(pred, gt, metric_masks, hole_only, csv, summary);
    if (*profile) return run_profile(frames, row, out);
  } catch (const std::exception& e) {
    std::cerr << "flowpatch " << cmd << " " << one_line(e.what()) << '\n';
    return 1;
  }
  return 1;
}
