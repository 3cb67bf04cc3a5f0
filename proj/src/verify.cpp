#include "spmcsr/verify.hpp"

#include "spmcsr/evaldata.hpp"
#include "spmcsr/operators.hpp"
#include "spmcsr/reconstruct.hpp"
#include "spmcsr/spmc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

namespace spmcsr::verify {

namespace {

constexpr double kAdjointTol = 1e-10;
constexpr double kImageGradTol = 1e-6;
constexpr double kFlowGradTol = 1e-4;
constexpr double kRecoveryTol = 1e-10;
constexpr double kKinkMargin = 1e-2;
constexpr double kFlowStep = 1e-4;
constexpr double kImageStep = 1e-3;

using Rng = std::mt19937_64;

Image random_image(Rng &rng, Eigen::Index w, Eigen::Index h, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = u(rng);
  return img;
}

Flow random_flow(Rng &rng, Eigen::Index w, Eigen::Index h, double mag) {
  return {random_image(rng, w, h, -mag, mag), random_image(rng, w, h, -mag, mag)};
}

double inner(const Image &a, const Image &b) { return (a * b).sum(); }

struct Tracker {
  CheckResult r;
  Tracker(std::string name, double tol) { r.name = std::move(name), r.tolerance = tol; }
  void add(double err) {
    r.max_error = std::max(r.max_error, err);
    ++r.trials;
  }
  CheckResult done() {
    r.passed = r.trials > 0 && r.max_error <= r.tolerance;
    return r;
  }
};

// Distance of alpha * (x + u) from the nearest integer.
double kink_distance(double alpha, double x, double u) {
  const double s = alpha * (x + u);
  return std::abs(s - std::round(s));
}

}  // namespace

double relative_error(const double *a, const double *f, long n) {
  double diff = 0.0, scale = 0.0;
  for (long i = 0; i < n; ++i) {
    diff = std::max(diff, std::abs(a[i] - f[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(f[i])});
  }
  return scale == 0.0 ? 0.0 : diff / scale;
}

std::vector<CheckResult> adjoint_suite(std::uint64_t seed, int trials) {
  Rng rng(seed);
  constexpr Eigen::Index n = 8;
  const std::array<int, 3> factors{1, 2, 4};
  const std::array<double, 5> alphas{1.0, 2.0, 2.5, 3.0, 4.0};

  Tracker s("adjoint S/S^T", kAdjointTol), wb("adjoint W/W^T bilinear", kAdjointTol),
      wc("adjoint W/W^T bicubic", kAdjointTol), k("adjoint K/K", kAdjointTol),
      sp("adjoint SPMC forward/backward", kAdjointTol), sg("adjoint SPMC forward/gather", kAdjointTol),
      ne("symmetry normal operator", kAdjointTol);
  std::uniform_real_distribution<double> sig(0.5, 2.0);
  for (int t = 0; t < trials; ++t) {
    {
      const DecimationFactor f(factors[std::size_t(t) % factors.size()]);
      const Image x = random_image(rng, n, n), y = random_image(rng, n / f.alpha, n / f.alpha);
      s.add(std::abs(inner(decimate(x, f), y) - inner(x, zero_upsample(y, f))));
    }
    {
      const Flow fl = random_flow(rng, n, n, 2.0);
      const Image x = random_image(rng, n, n), y = random_image(rng, n, n);
      wb.add(std::abs(inner(backward_warp(x, fl), y) - inner(x, forward_warp(y, fl))));
      const auto cub = SamplingKernel::bicubic();
      wc.add(std::abs(inner(backward_warp(x, fl, cub), y) - inner(x, forward_warp(y, fl, cub))));
    }
    {
      const BlurSpec b(sig(rng));
      const Image x = random_image(rng, n, n), y = random_image(rng, n, n);
      k.add(std::abs(inner(gaussian_blur(x, b), y) - inner(x, gaussian_blur(y, b))));
    }
    {
      const SpmcConfig<double> cfg(alphas[std::size_t(t) % alphas.size()]);
      const Flow fl = random_flow(rng, n, n, 1.5);
      const Image x = random_image(rng, n, n);
      const auto [hw, hh] = spmc_output_size(n, n, cfg);
      const Image y = random_image(rng, hw, hh);
      const double lhs = inner(spmc_forward(x, fl, cfg), y);
      sp.add(std::abs(lhs - inner(x, spmc_backward(x, fl, cfg, y).d_image)));
      sg.add(std::abs(lhs - inner(x, spmc_adjoint(y, fl, cfg))));
    }
    {
      const SpmcConfig<double> cfg(2.0);
      const std::vector<Flow> flows{Flow::zeros(n, n), random_flow(rng, n, n, 1.0), random_flow(rng, n, n, 1.0)};
      const Image x = random_image(rng, 2 * n, 2 * n), y = random_image(rng, 2 * n, 2 * n);
      ne.add(std::abs(inner(apply_normal_operator(x, flows, cfg, 1e-3), y) -
                      inner(x, apply_normal_operator(y, flows, cfg, 1e-3))));
    }
  }
  return {s.done(), wb.done(), wc.done(), k.done(), sp.done(), sg.done(), ne.done()};
}

std::vector<CheckResult> gradcheck_suite(std::uint64_t seed, int trials) {
  Rng rng(seed);
  constexpr Eigen::Index n = 6;
  const std::array<double, 5> alphas{1.0, 2.0, 2.5, 3.0, 4.0};
  std::uniform_real_distribution<double> flow_dist(-1.5, 1.5);
  Tracker ti("gradient dImage vs finite differences", kImageGradTol),
      tf("gradient dFlow vs finite differences", kFlowGradTol);

  for (int t = 0; t < trials; ++t) {
    const SpmcConfig<double> cfg(alphas[std::size_t(t) % alphas.size()]);
    const Image img = random_image(rng, n, n);
    Flow fl = Flow::zeros(n, n);
    for (Eigen::Index y = 0; y < n; ++y)
      for (Eigen::Index x = 0; x < n; ++x) {
        do fl.u(y, x) = flow_dist(rng);
        while (kink_distance(cfg.alpha, double(x), fl.u(y, x)) < kKinkMargin);
        do fl.v(y, x) = flow_dist(rng);
        while (kink_distance(cfg.alpha, double(y), fl.v(y, x)) < kKinkMargin);
      }
    const auto [hw, hh] = spmc_output_size(n, n, cfg);
    const Image up = random_image(rng, hw, hh, -1.0, 1.0);
    const auto grads = spmc_backward(img, fl, cfg, up);

    // Scalar loss L = <upstream, spmc_forward(img, flow)>.
    auto loss = [&](const Image &i, const Flow &f) { return inner(up, spmc_forward(i, f, cfg)); };

    Image fd_img(n, n), fd_u(n, n), fd_v(n, n);
    for (Eigen::Index p = 0; p < n * n; ++p) {
      Image ip = img, im = img;
      ip.data()[p] += kImageStep;
      im.data()[p] -= kImageStep;
      fd_img.data()[p] = (loss(ip, fl) - loss(im, fl)) / (2 * kImageStep);
      Flow fp = fl, fm = fl;
      fp.u.data()[p] += kFlowStep;
      fm.u.data()[p] -= kFlowStep;
      fd_u.data()[p] = (loss(img, fp) - loss(img, fm)) / (2 * kFlowStep);
      fp = fl, fm = fl;
      fp.v.data()[p] += kFlowStep;
      fm.v.data()[p] -= kFlowStep;
      fd_v.data()[p] = (loss(img, fp) - loss(img, fm)) / (2 * kFlowStep);
    }
    ti.add(relative_error(grads.d_image.data(), fd_img.data(), n * n));
    tf.add(std::max(relative_error(grads.d_flow_u.data(), fd_u.data(), n * n),
                    relative_error(grads.d_flow_v.data(), fd_v.data(), n * n)));
  }
  return {ti.done(), tf.done()};
}

std::vector<CheckResult> recovery_suite(std::uint64_t seed, int trials) {
  std::vector<CheckResult> out;
  for (int alpha : {2, 4}) {
    Tracker err("recovery alpha=" + std::to_string(alpha) + " interior max error", kRecoveryTol);
    Tracker cap("recovery alpha=" + std::to_string(alpha) + " PSNR below cap (dB)", 0.0);
    for (int t = 0; t < trials; ++t) {
      const Image hr = random_texture(64, 64, seed + std::uint64_t(t), 1.0);
      const auto syn = make_exact_sequence(SyntheticSequenceSpec<double>{hr, phase_covering_shifts(alpha), alpha, {}});
      ReconstructionConfig cfg;
      cfg.alpha = alpha;
      const Image rec = shift_and_add(align_stack(syn.sequence, syn.flows_to_ref, cfg), cfg);
      const Image a = crop_border(rec, alpha), b = crop_border(hr, alpha);
      err.add((a - b).abs().maxCoeff());
      cap.add(kPsnrCap - psnr(a, b));
    }
    out.push_back(err.done());
    out.push_back(cap.done());
  }
  return out;
}

std::vector<CheckResult> equivalence_suite(std::uint64_t seed, int trials) {
  Rng rng(seed);
  Tracker zu("bitwise SPMC(zero flow) == zero_upsample", 0.0), fw("bitwise SPMC(alpha=1) == forward_warp", 0.0);
  std::uniform_int_distribution<int> dim(1, 12), fac(1, 4);
  for (int t = 0; t < trials; ++t) {
    const Eigen::Index w = dim(rng), h = dim(rng);
    const int a = fac(rng);
    const Image x = random_image(rng, w, h);
    const Image s = spmc_forward(x, Flow::zeros(w, h), SpmcConfig<double>(a));
    const Image z = zero_upsample(x, DecimationFactor(a));
    zu.add(s.cols() == z.cols() && s.rows() == z.rows() && std::equal(s.data(), s.data() + s.size(), z.data()) ? 0.0
                                                                                                             : 1.0);
    const Flow fl = random_flow(rng, w, h, 3.0);
    const Image s1 = spmc_forward(x, fl, SpmcConfig<double>(1.0));
    const Image f1 = forward_warp(x, fl);
    fw.add(std::equal(s1.data(), s1.data() + s1.size(), f1.data()) ? 0.0 : 1.0);
  }
  return {zu.done(), fw.done()};
}

std::vector<CheckResult> run_suite(const std::string &name, std::uint64_t seed, int trials) {
  if (trials < 1) throw std::invalid_argument("verify: trials must be >= 1");
  if (name == "adjoint") return adjoint_suite(seed, trials);
  if (name == "gradcheck") return gradcheck_suite(seed, trials);
  if (name == "recovery") return recovery_suite(seed, trials);
  if (name == "equivalence") return equivalence_suite(seed, trials);
  if (name == "all") {
    std::vector<CheckResult> all;
    for (const char *s : {"adjoint", "gradcheck", "recovery", "equivalence"}) {
      auto part = run_suite(s, seed, trials);
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  }
  throw std::invalid_argument("verify: unknown suite '" + name + "'");
}

}  // namespace spmcsr::verify
