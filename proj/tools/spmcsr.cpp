// spmcsr: batch pipeline for multi-frame super-resolution.
//
//   spmcsr degrade <in_dir> <out_dir> [--alpha 4] [--method bicubic|exact] ...
//   spmcsr flow <ref> <target> --out flow.flo [--levels 3] [--iters 300] ...
//   spmcsr reconstruct <seq_dir> --out hr.png [--align spmc|bw] [--solver sna|cg] ...
//   spmcsr eval <a> <b> [--border 0] [--metric psnr|ssim|both]
//   spmcsr verify [--suite all] [--seed 0] [--trials 100]
//   spmcsr replay <manifest>
//
// Results are printed as key=value lines. Exit codes: 0 success, 1 failed
// verification, 2 usage or I/O error.

#include "spmcsr/evaldata.hpp"
#include "spmcsr/flow.hpp"
#include "spmcsr/io.hpp"
#include "spmcsr/manifest.hpp"
#include "spmcsr/reconstruct.hpp"
#include "spmcsr/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace spmcsr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

RunManifest start_manifest(const std::string &command, const std::vector<std::string> &argv) {
  RunManifest m;
  m.command = command;
  m.version = toolkit_version();
  m.argv = argv;
  m.set("cwd", fs::current_path().string());
  return m;
}

std::vector<std::pair<double, double>> read_shifts(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open shifts file " + path.string());
  std::vector<std::pair<double, double>> shifts;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double dx, dy;
    if (!(ls >> dx >> dy)) throw IoError("bad line in shifts file: '" + line + "'");
    shifts.emplace_back(dx, dy);
  }
  return shifts;
}

// --- degrade -------------------------------------------------------------

struct DegradeArgs {
  std::string in_dir, out_dir, method = "bicubic", shifts, manifest;
  int alpha = 4;
  int reference = -1;
  double noise_sigma = 0.0, blur_sigma = 0.0;
  std::uint64_t seed = 0;
};

int cmd_degrade(const DegradeArgs &a, const std::vector<std::string> &argv) {
  Timer timer;
  RunManifest m = start_manifest("degrade", argv);
  const auto files = list_image_files(a.in_dir);
  if (files.empty()) throw IoError("no png/pgm frames in " + a.in_dir);
  fs::create_directories(a.out_dir);

  DegradationSpec spec;
  spec.alpha = a.alpha;
  spec.noise_sigma = a.noise_sigma;
  if (a.blur_sigma > 0.0) spec.blur = BlurSpec(a.blur_sigma);

  SequenceDirectory out;
  out.alpha = a.alpha;
  out.seed = a.seed;
  if (a.method == "bicubic") {
    spec.method = DegradationMethod::BicubicChain;
    for (std::size_t i = 0; i < files.size(); ++i) {
      spec.seed = a.seed + i;
      out.frames.push_back(degrade(read_gray(files[i]), spec));
      m.inputs.push_back(files[i].string());
    }
    out.reference_index = a.reference >= 0 ? std::size_t(a.reference) : (files.size() - 1) / 2;
  } else if (a.method == "exact") {
    const Image hr = read_gray(files.front());
    m.inputs.push_back(files.front().string());
    const auto shifts = a.shifts.empty() ? phase_covering_shifts(a.alpha) : read_shifts(a.shifts);
    const auto syn = make_exact_sequence(SyntheticSequenceSpec<double>{hr, shifts, a.alpha, spec.blur});
    for (std::size_t i = 0; i < syn.sequence.size(); ++i) {
      Image f = syn.sequence[i];
      add_gaussian_noise(f, a.noise_sigma, a.seed + i);
      out.frames.push_back(std::move(f));
      if (i == 0) continue;
      const fs::path to_ref = fs::path(a.out_dir) / flow_to_ref_name(long(i));
      const fs::path from_ref = fs::path(a.out_dir) / flow_from_ref_name(long(i));
      write_flo(to_ref, syn.flows_to_ref[i]);
      write_flo(from_ref, syn.flows_from_ref[i]);
      m.outputs.push_back(to_ref.string());
      m.outputs.push_back(from_ref.string());
    }
    out.reference_index = 0;
    m.set("exact_regime", syn.exact ? "integer-hr" : "interpolated");
    std::cout << "exact_regime=" << (syn.exact ? "integer-hr" : "interpolated") << "\n";
  } else {
    throw UsageError("--method must be bicubic or exact");
  }
  write_sequence_dir(a.out_dir, out);
  for (std::size_t i = 0; i < out.frames.size(); ++i) m.outputs.push_back((fs::path(a.out_dir) / frame_file_name(i)).string());

  m.seed = a.seed;
  m.set("alpha", std::to_string(a.alpha));
  m.set("method", a.method);
  m.set("noise_sigma", num(a.noise_sigma));
  m.set("blur_sigma", num(a.blur_sigma));
  m.set("reference", std::to_string(out.reference_index));
  m.seconds = timer.seconds();
  const fs::path mpath = a.manifest.empty() ? fs::path(a.out_dir) / "manifest.txt" : fs::path(a.manifest);
  m.write(mpath);

  std::cout << "frames=" << out.frames.size() << "\n"
            << "lr_width=" << out.frames[0].cols() << "\n"
            << "lr_height=" << out.frames[0].rows() << "\n"
            << "reference=" << out.reference_index << "\n"
            << "manifest=" << mpath.string() << "\n";
  return kExitOk;
}

// --- flow ----------------------------------------------------------------

struct FlowArgs {
  std::string ref, target, out, manifest;
  FlowEstimationConfig cfg;
};

int cmd_flow(const FlowArgs &a, const std::vector<std::string> &argv) {
  Timer timer;
  RunManifest m = start_manifest("flow", argv);
  const Image ref = read_gray(a.ref), target = read_gray(a.target);
  if (!same_shape(ref, target)) throw DimensionError("flow: frames differ in size");
  const auto est = estimate_flow_pyramidal_traced(ref, target, a.cfg);
  write_flo(a.out, est.flow);

  for (std::size_t l = 0; l < est.level_traces.size(); ++l) {
    const auto level = est.level_traces.size() - 1 - l;
    for (std::size_t k = 0; k < est.level_traces[l].size(); ++k) {
      const auto &r = est.level_traces[l][k];
      std::cout << "level=" << level << " iter=" << k << " data=" << num(r.data_term) << " tv=" << num(r.tv_term)
                << " total=" << num(r.total) << "\n";
    }
  }
  const auto final_loss = warp_loss(ref, target, est.flow, a.cfg.lambda1, a.cfg.kernel);
  std::cout << "mean_u=" << fmt(est.flow.u.mean(), 6) << "\n"
            << "mean_v=" << fmt(est.flow.v.mean(), 6) << "\n"
            << "final_total=" << num(final_loss.total) << "\n";

  m.inputs = {a.ref, a.target};
  m.outputs = {a.out};
  m.set("levels", std::to_string(a.cfg.pyramid_levels));
  m.set("iters", std::to_string(a.cfg.iterations_per_level));
  m.set("lambda1", num(a.cfg.lambda1));
  m.set("step", num(a.cfg.step_size));
  m.set("orientation", "flow maps target pixels into ref (F_{target->ref})");
  m.seconds = timer.seconds();
  const fs::path mpath = a.manifest.empty() ? fs::path(a.out + ".manifest.txt") : fs::path(a.manifest);
  m.write(mpath);
  std::cout << "manifest=" << mpath.string() << "\n";
  return kExitOk;
}

// --- reconstruct ---------------------------------------------------------

struct ReconstructArgs {
  std::string seq_dir, align = "spmc", solver = "sna", flows = "auto", out, truth, hole_fill = "bicubic", manifest;
  double alpha = 0.0;
  int frames = 0;
  double eps = 1e-3;
  int cg_iters = 200;
  double cg_tol = 1e-10;
  int flow_levels = 3;
  int flow_iters = 300;
  double lambda1 = 0.01;
  bool center_aligned = false;
};

int cmd_reconstruct(const ReconstructArgs &a, const std::vector<std::string> &argv) {
  Timer timer;
  RunManifest m = start_manifest("reconstruct", argv);
  const SequenceDirectory dir = read_sequence_dir(a.seq_dir);
  const std::size_t n = a.frames > 0 ? std::min<std::size_t>(std::size_t(a.frames), dir.frames.size()) : dir.frames.size();
  if (dir.reference_index >= n) throw UsageError("--frames must include the reference frame");
  const Sequence<double> seq(std::vector<Image>(dir.frames.begin(), dir.frames.begin() + long(n)), dir.reference_index);

  ReconstructionConfig cfg;
  cfg.alpha = a.alpha > 0.0 ? a.alpha : double(dir.alpha);
  cfg.tikhonov_eps = a.eps;
  cfg.cg_max_iters = a.cg_iters;
  cfg.cg_tolerance = a.cg_tol;
  cfg.center_aligned = a.center_aligned;
  if (a.align == "spmc") cfg.alignment = Alignment::Spmc;
  else if (a.align == "bw") cfg.alignment = Alignment::BackwardWarp;
  else throw UsageError("--align must be spmc or bw");
  if (a.solver == "sna") cfg.solver = Solver::ShiftAndAdd;
  else if (a.solver == "cg") cfg.solver = Solver::ConjugateGradient;
  else throw UsageError("--solver must be sna or cg");
  if (a.hole_fill == "bicubic") cfg.hole_fill = HoleFill::BicubicReference;
  else if (a.hole_fill == "zero") cfg.hole_fill = HoleFill::Zero;
  else throw UsageError("--hole-fill must be bicubic or zero");
  if (cfg.solver == Solver::ConjugateGradient && cfg.alignment != Alignment::Spmc) {
    throw UsageError("--solver cg requires --align spmc");
  }

  // SPMC consumes F_{i->0}; BW consumes F_{0->i}.
  const bool spmc = cfg.alignment == Alignment::Spmc;
  std::vector<Flow> flows;
  FlowEstimationConfig fcfg;
  fcfg.pyramid_levels = a.flow_levels;
  fcfg.iterations_per_level = a.flow_iters;
  fcfg.lambda1 = a.lambda1;
  for (std::size_t i = 0; i < n; ++i) {
    const long offset = long(i) - long(seq.reference_index());
    if (offset == 0) {
      flows.push_back(Flow::zeros(seq.width(), seq.height()));
      continue;
    }
    if (a.flows == "auto") {
      flows.push_back(spmc ? estimate_flow_pyramidal(seq.reference(), seq[i], fcfg)
                           : estimate_flow_pyramidal(seq[i], seq.reference(), fcfg));
    } else {
      const fs::path p = fs::path(a.flows) / (spmc ? flow_to_ref_name(offset) : flow_from_ref_name(offset));
      if (!fs::exists(p)) throw IoError("missing flow file " + p.string());
      flows.push_back(read_flo(p));
      m.inputs.push_back(p.string());
    }
  }

  Image hr;
  double cg_residual = -1.0;
  int cg_iterations = 0;
  bool cg_converged = true;
  std::vector<double> frame_coverage;
  double total_coverage = 1.0;
  if (cfg.solver == Solver::ConjugateGradient) {
    const auto res = solve_normal_equations(seq, flows, cfg);
    hr = res.image;
    cg_residual = res.cg.final_relative_residual();
    cg_iterations = res.cg.iterations;
    cg_converged = res.cg.converged;
  }
  const auto stack = align_stack(seq, flows, cfg);
  for (const auto &w : stack.weights) frame_coverage.push_back(double((w > kHoleThreshold).count()) / double(w.size()));
  total_coverage = coverage(stack);
  if (cfg.solver == Solver::ShiftAndAdd) hr = shift_and_add(stack, cfg);

  write_image(a.out, hr);
  std::cout << "hr_width=" << hr.cols() << "\nhr_height=" << hr.rows() << "\n";
  for (std::size_t i = 0; i < frame_coverage.size(); ++i) {
    std::cout << "frame." << i << ".coverage=" << fmt(frame_coverage[i], 6) << "\n";
  }
  std::cout << "coverage=" << fmt(total_coverage, 6) << "\n";
  if (cfg.solver == Solver::ConjugateGradient) {
    std::cout << "cg_iterations=" << cg_iterations << "\ncg_relative_residual=" << num(cg_residual)
              << "\ncg_converged=" << (cg_converged ? 1 : 0) << "\n";
  }
  if (!a.truth.empty()) {
    const Image truth = read_gray(a.truth);
    if (!same_shape(truth, hr)) throw DimensionError("--truth size differs from the reconstruction");
    const auto border = static_cast<Eigen::Index>(std::ceil(cfg.alpha));
    const Image ca = crop_border(hr, border), cb = crop_border(truth, border);
    std::cout << "border=" << border << "\npsnr=" << fmt(psnr(ca, cb)) << "\n";
    if (ca.rows() >= 11 && ca.cols() >= 11) std::cout << "ssim=" << fmt(ssim(ca, cb)) << "\n";
    m.inputs.push_back(a.truth);
  }

  m.inputs.push_back(a.seq_dir);
  m.outputs = {a.out};
  m.seed = dir.seed;
  m.set("alpha", num(cfg.alpha));
  m.set("align", a.align);
  m.set("solver", a.solver);
  m.set("flows", a.flows);
  m.set("flow_orientation", spmc ? "F_{i->0} (flow_<i>_to_ref.flo)" : "F_{0->i} (flow_ref_to_<i>.flo)");
  m.set("frames", std::to_string(n));
  m.set("hole_fill", a.hole_fill);
  m.set("tikhonov_eps", num(a.eps));
  m.set("cg_iters", std::to_string(a.cg_iters));
  m.set("cg_tol", num(a.cg_tol));
  m.set("center_aligned", a.center_aligned ? "1" : "0");
  m.set("coverage", num(total_coverage));
  m.seconds = timer.seconds();
  const fs::path mpath = a.manifest.empty() ? fs::path(a.out + ".manifest.txt") : fs::path(a.manifest);
  m.write(mpath);
  std::cout << "manifest=" << mpath.string() << "\n";
  return kExitOk;
}

// --- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string a, b, metric = "both", manifest;
  int border = 0;
  double peak = 1.0;
};

int cmd_eval(const EvalArgs &e, const std::vector<std::string> &argv) {
  Timer timer;
  const Image a = read_gray(e.a), b = read_gray(e.b);
  if (!same_shape(a, b)) throw DimensionError("eval: images differ in size");
  const Image ca = crop_border(a, e.border), cb = crop_border(b, e.border);
  if (e.metric != "psnr" && e.metric != "ssim" && e.metric != "both") {
    throw UsageError("--metric must be psnr, ssim or both");
  }
  RunManifest m = start_manifest("eval", argv);
  if (e.metric == "psnr" || e.metric == "both") {
    const double v = psnr(ca, cb, e.peak);
    std::cout << "psnr=" << fmt(v) << "\n";
    m.set("psnr", num(v));
  }
  if (e.metric == "ssim" || e.metric == "both") {
    const double v = ssim(ca, cb, e.peak);
    std::cout << "ssim=" << fmt(v) << "\n";
    m.set("ssim", num(v));
  }
  if (!e.manifest.empty()) {
    m.inputs = {e.a, e.b};
    m.set("border", std::to_string(e.border));
    m.set("metric", e.metric);
    m.set("peak", num(e.peak));
    m.seconds = timer.seconds();
    m.write(e.manifest);
  }
  return kExitOk;
}

// --- verify --------------------------------------------------------------

struct VerifyArgs {
  std::string suite = "all", manifest;
  std::uint64_t seed = 0;
  int trials = 100;
};

int cmd_verify(const VerifyArgs &v, const std::vector<std::string> &argv) {
  Timer timer;
  const auto results = verify::run_suite(v.suite, v.seed, v.trials);
  bool ok = true;
  RunManifest m = start_manifest("verify", argv);
  for (const auto &r : results) {
    std::cout << "check=\"" << r.name << "\" max_error=" << num(r.max_error) << " tolerance=" << num(r.tolerance)
              << " trials=" << r.trials << " status=" << (r.passed ? "PASS" : "FAIL") << "\n";
    if (!r.passed) {
      ok = false;
      std::cerr << "failed property: " << r.name << "\n";
    }
    m.set(r.name, r.passed ? "PASS" : "FAIL");
  }
  std::cout << "result=" << (ok ? "PASS" : "FAIL") << "\n";
  if (!v.manifest.empty()) {
    m.seed = v.seed;
    m.set("suite", v.suite);
    m.set("trials", std::to_string(v.trials));
    m.seconds = timer.seconds();
    m.write(v.manifest);
  }
  return ok ? kExitOk : kExitVerifyFailed;
}

int run(const std::vector<std::string> &args);

int cmd_replay(const std::string &path) {
  const RunManifest m = RunManifest::read(path);
  if (m.argv.empty()) throw IoError(path + ": manifest has no recorded argv");
  if (const auto *cwd = m.find("cwd")) fs::current_path(*cwd);
  return run(m.argv);
}

int run(const std::vector<std::string> &args) {
  CLI::App app{"Multi-frame super-resolution with sub-pixel motion compensation", "spmcsr"};
  app.require_subcommand(1);

  DegradeArgs dg;
  auto *degrade = app.add_subcommand("degrade", "Produce an LR sequence from HR frames");
  degrade->add_option("in_dir", dg.in_dir, "Directory of HR frames (png/pgm)")->required();
  degrade->add_option("out_dir", dg.out_dir, "Output sequence directory")->required();
  degrade->add_option("--alpha", dg.alpha, "Integer downscale factor")->check(CLI::Range(1, 16));
  degrade->add_option("--method", dg.method, "bicubic (antialiased chain) or exact (S K W model)");
  degrade->add_option("--shifts", dg.shifts, "exact: file of 'dx dy' LR shifts, first line 0 0");
  degrade->add_option("--noise-sigma", dg.noise_sigma, "Additive Gaussian noise sigma")->check(CLI::NonNegativeNumber);
  degrade->add_option("--blur-sigma", dg.blur_sigma, "exact: Gaussian blur K before decimation (0 = none)")
      ->check(CLI::NonNegativeNumber);
  degrade->add_option("--seed", dg.seed, "Noise seed");
  degrade->add_option("--reference", dg.reference, "bicubic: reference frame index (default: middle)");
  degrade->add_option("--manifest", dg.manifest, "Manifest path (default: <out_dir>/manifest.txt)");

  FlowArgs fl;
  auto *flow = app.add_subcommand("flow", "Estimate the flow mapping target pixels into ref");
  flow->add_option("ref", fl.ref)->required();
  flow->add_option("target", fl.target)->required();
  flow->add_option("--out", fl.out, "Output .flo")->required();
  flow->add_option("--levels", fl.cfg.pyramid_levels, "Pyramid levels")->check(CLI::Range(1, 12));
  flow->add_option("--iters", fl.cfg.iterations_per_level, "Iterations per level")->check(CLI::NonNegativeNumber);
  flow->add_option("--lambda1", fl.cfg.lambda1, "TV weight")->check(CLI::NonNegativeNumber);
  flow->add_option("--step", fl.cfg.step_size, "Initial step size")->check(CLI::PositiveNumber);
  flow->add_option("--manifest", fl.manifest, "Manifest path (default: <out>.manifest.txt)");

  ReconstructArgs rc;
  auto *recon = app.add_subcommand("reconstruct", "Reconstruct the HR reference frame");
  recon->add_option("seq_dir", rc.seq_dir)->required();
  recon->add_option("--out", rc.out, "Output image (png/pgm)")->required();
  recon->add_option("--alpha", rc.alpha, "Scale factor (default: from sequence.txt)");
  recon->add_option("--align", rc.align, "spmc or bw");
  recon->add_option("--solver", rc.solver, "sna (shift-and-add) or cg (normal equations)");
  recon->add_option("--flows", rc.flows, "Directory of .flo files, or 'auto' to estimate");
  recon->add_option("--frames", rc.frames, "Use only the first N frames (0 = all)");
  recon->add_option("--truth", rc.truth, "HR ground truth; prints psnr/ssim with border = alpha");
  recon->add_option("--hole-fill", rc.hole_fill, "bicubic or zero");
  recon->add_option("--eps", rc.eps, "Tikhonov weight for cg")->check(CLI::NonNegativeNumber);
  recon->add_option("--cg-iters", rc.cg_iters, "CG iteration cap");
  recon->add_option("--cg-tol", rc.cg_tol, "CG relative residual tolerance")->check(CLI::PositiveNumber);
  recon->add_option("--flow-levels", rc.flow_levels, "auto flows: pyramid levels");
  recon->add_option("--flow-iters", rc.flow_iters, "auto flows: iterations per level");
  recon->add_option("--lambda1", rc.lambda1, "auto flows: TV weight");
  recon->add_flag("--center-aligned", rc.center_aligned, "Offset the SPMC grid by (alpha-1)/2");
  recon->add_option("--manifest", rc.manifest, "Manifest path (default: <out>.manifest.txt)");

  EvalArgs ev;
  auto *eval = app.add_subcommand("eval", "Compare two images");
  eval->add_option("a", ev.a)->required();
  eval->add_option("b", ev.b)->required();
  eval->add_option("--border", ev.border, "Pixels cropped on each side")->check(CLI::NonNegativeNumber);
  eval->add_option("--metric", ev.metric, "psnr, ssim or both");
  eval->add_option("--peak", ev.peak, "Peak value / dynamic range")->check(CLI::PositiveNumber);
  eval->add_option("--manifest", ev.manifest, "Write a manifest to this path");

  VerifyArgs vf;
  auto *ver = app.add_subcommand("verify", "Run the built-in property suites");
  ver->add_option("--suite", vf.suite, "adjoint, gradcheck, recovery, equivalence or all");
  ver->add_option("--seed", vf.seed, "Random seed");
  ver->add_option("--trials", vf.trials, "Random instances per check")->check(CLI::PositiveNumber);
  ver->add_option("--manifest", vf.manifest, "Write a manifest to this path");

  std::string replay_path;
  auto *replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("manifest", replay_path)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*degrade) return cmd_degrade(dg, args);
    if (*flow) return cmd_flow(fl, args);
    if (*recon) return cmd_reconstruct(rc, args);
    if (*eval) return cmd_eval(ev, args);
    if (*ver) return cmd_verify(vf, args);
    if (*replay) return cmd_replay(replay_path);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}
