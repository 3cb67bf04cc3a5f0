#ifndef SPMCSR_FLOW_HPP
#define SPMCSR_FLOW_HPP

// Classical motion estimation driven by the unsupervised warping loss
//
//   L = sum_p |target_p - W(ref, F)_p| + lambda1 * TV(F)
//
// where W is the bilinear backward warp and TV is the anisotropic total
// variation of u and v with forward differences. Refinement descends a
// Charbonnier-smoothed copy of L with an Armijo backtracking line search; a
// step is only accepted if the unsmoothed L does not grow.

#include "spmcsr/core.hpp"
#include "spmcsr/operators.hpp"
#include "spmcsr/resample.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace spmcsr {

struct FlowEstimationConfig {
  int pyramid_levels = 3;
  int iterations_per_level = 300;
  double step_size = 1.0;
  double lambda1 = 0.01;
  SamplingKernel kernel = SamplingKernel::bilinear();
  double charbonnier_eps = 1e-3;

  void validate() const {
    if (pyramid_levels < 1) throw std::invalid_argument("FlowEstimationConfig: pyramid_levels must be >= 1");
    if (iterations_per_level < 0) throw std::invalid_argument("FlowEstimationConfig: negative iteration count");
    if (!(step_size > 0.0)) throw std::invalid_argument("FlowEstimationConfig: step_size must be positive");
    if (!(lambda1 >= 0.0)) throw std::invalid_argument("FlowEstimationConfig: lambda1 must be >= 0");
    if (!(charbonnier_eps > 0.0)) throw std::invalid_argument("FlowEstimationConfig: charbonnier_eps must be > 0");
  }
};

struct WarpLossReport {
  double data_term = 0.0;
  double tv_term = 0.0;
  double total = 0.0;
};

/// Anisotropic TV of both flow components; the last column/row has no
/// forward difference.
template <typename Scalar>
double flow_total_variation(const FlowField<Scalar> &flow) {
  double tv = 0.0;
  const Eigen::Index w = flow.width(), h = flow.height();
  for (const auto *c : {&flow.u, &flow.v}) {
    if (w > 1) tv += double((c->rightCols(w - 1) - c->leftCols(w - 1)).abs().sum());
    if (h > 1) tv += double((c->bottomRows(h - 1) - c->topRows(h - 1)).abs().sum());
  }
  return tv;
}

/// Exact (unsmoothed) warping loss. flow maps target pixels into ref.
template <typename Scalar>
WarpLossReport warp_loss(const ImageGrid<Scalar> &ref, const ImageGrid<Scalar> &target, const FlowField<Scalar> &flow,
                         double lambda1, const SamplingKernel &kernel = SamplingKernel::bilinear()) {
  require_same_shape(ref, target, "warp_loss");
  require_flow_matches(flow, ref, "warp_loss");
  WarpLossReport r;
  r.data_term = double((target - backward_warp(ref, flow, kernel)).abs().sum());
  r.tv_term = flow_total_variation(flow);
  r.total = r.data_term + lambda1 * r.tv_term;
  return r;
}

template <typename Scalar>
struct SampleWithGradient {
  Scalar value;
  Scalar dx;
  Scalar dy;
};

/// Zero-padded sample plus its spatial derivative. For the bilinear kernel
/// the derivative is the slope of the cell containing (x, y), averaged with
/// the neighbouring cell on grid lines; otherwise the kernel slope.
template <typename Scalar>
SampleWithGradient<Scalar> sample_with_gradient(const ImageGrid<Scalar> &img, Scalar x, Scalar y,
                                                const SamplingKernel &kernel) {
  using std::floor;
  const auto x0 = static_cast<Eigen::Index>(floor(x));
  const auto y0 = static_cast<Eigen::Index>(floor(y));
  auto at = [&](Eigen::Index yy, Eigen::Index xx) {
    return (xx < 0 || yy < 0 || xx >= img.cols() || yy >= img.rows()) ? Scalar(0) : img(yy, xx);
  };
  if (kernel.kind == KernelKind::Bilinear) {
    const Scalar fx = x - Scalar(x0), fy = y - Scalar(y0);
    const Scalar i00 = at(y0, x0), i01 = at(y0, x0 + 1), i10 = at(y0 + 1, x0), i11 = at(y0 + 1, x0 + 1);
    const Scalar top = i00 + fx * (i01 - i00);
    const Scalar bot = i10 + fx * (i11 - i10);
    SampleWithGradient<Scalar> s{top + fy * (bot - top), (Scalar(1) - fy) * (i01 - i00) + fy * (i11 - i10), bot - top};
    // On a grid line the two adjacent cells disagree; average their slopes.
    if (fx == Scalar(0)) {
      const Scalar l0 = i00 - at(y0, x0 - 1), l1 = i10 - at(y0 + 1, x0 - 1);
      s.dx = Scalar(0.5) * (s.dx + (Scalar(1) - fy) * l0 + fy * l1);
    }
    if (fy == Scalar(0)) {
      const Scalar u0 = i00 - at(y0 - 1, x0), u1 = i01 - at(y0 - 1, x0 + 1);
      s.dy = Scalar(0.5) * (s.dy + (Scalar(1) - fx) * u0 + fx * u1);
    }
    return s;
  }
  const int r = kernel.support();
  SampleWithGradient<Scalar> s{Scalar(0), Scalar(0), Scalar(0)};
  for (Eigen::Index iy = y0 - r + 1; iy <= y0 + r; ++iy) {
    const Scalar wy = kernel.value(y - Scalar(iy)), dwy = kernel.derivative(y - Scalar(iy));
    for (Eigen::Index ix = x0 - r + 1; ix <= x0 + r; ++ix) {
      const Scalar v = at(iy, ix);
      if (v == Scalar(0)) continue;
      const Scalar wx = kernel.value(x - Scalar(ix)), dwx = kernel.derivative(x - Scalar(ix));
      s.value += v * wx * wy;
      s.dx += v * dwx * wy;
      s.dy += v * wx * dwy;
    }
  }
  return s;
}

template <typename Scalar>
struct WarpObjective {
  double value = 0.0;
  FlowField<Scalar> gradient;
};

/// Charbonnier-smoothed warping loss, sqrt(t^2 + eps^2) in place of |t| for
/// both terms, and its gradient with respect to (u, v).
template <typename Scalar>
WarpObjective<Scalar> warp_objective(const ImageGrid<Scalar> &ref, const ImageGrid<Scalar> &target,
                                     const FlowField<Scalar> &flow, double lambda1, double eps,
                                     const SamplingKernel &kernel = SamplingKernel::bilinear()) {
  require_same_shape(ref, target, "warp_objective");
  require_flow_matches(flow, ref, "warp_objective");
  const Eigen::Index w = ref.cols(), h = ref.rows();
  const Scalar e2 = Scalar(eps * eps);
  WarpObjective<Scalar> obj{0.0, FlowField<Scalar>::zeros(w, h)};
  auto &gu = obj.gradient.u;
  auto &gv = obj.gradient.v;
  using std::sqrt;

  Scalar data(0);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const auto s = sample_with_gradient(ref, Scalar(x) + flow.u(y, x), Scalar(y) + flow.v(y, x), kernel);
      const Scalar res = target(y, x) - s.value;
      const Scalar rho = sqrt(res * res + e2);
      data += rho;
      const Scalar dpsi = res / rho;
      gu(y, x) = -dpsi * s.dx;
      gv(y, x) = -dpsi * s.dy;
    }
  }

  Scalar tv(0);
  const Scalar lam = Scalar(lambda1);
  auto add_tv = [&](const ImageGrid<Scalar> &c, ImageGrid<Scalar> &g) {
    for (Eigen::Index y = 0; y < h; ++y) {
      for (Eigen::Index x = 0; x < w; ++x) {
        if (x + 1 < w) {
          const Scalar d = c(y, x + 1) - c(y, x);
          const Scalar rho = sqrt(d * d + e2);
          tv += rho;
          g(y, x) -= lam * d / rho;
          g(y, x + 1) += lam * d / rho;
        }
        if (y + 1 < h) {
          const Scalar d = c(y + 1, x) - c(y, x);
          const Scalar rho = sqrt(d * d + e2);
          tv += rho;
          g(y, x) -= lam * d / rho;
          g(y + 1, x) += lam * d / rho;
        }
      }
    }
  };
  add_tv(flow.u, gu);
  add_tv(flow.v, gv);
  obj.value = double(data) + lambda1 * double(tv);
  return obj;
}

template <typename Scalar>
struct FlowRefinement {
  FlowField<Scalar> flow;
  std::vector<WarpLossReport> trace;  // trace[0] is the initial flow
  int accepted_steps = 0;
};

namespace detail {

template <typename Scalar>
using FlowVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
FlowVector<Scalar> pack(const FlowField<Scalar> &f) {
  FlowVector<Scalar> x(f.u.size() + f.v.size());
  x << Eigen::Map<const FlowVector<Scalar>>(f.u.data(), f.u.size()),
      Eigen::Map<const FlowVector<Scalar>>(f.v.data(), f.v.size());
  return x;
}

template <typename Scalar>
FlowField<Scalar> unpack(const FlowVector<Scalar> &x, Eigen::Index w, Eigen::Index h) {
  FlowField<Scalar> f = FlowField<Scalar>::zeros(w, h);
  Eigen::Map<FlowVector<Scalar>>(f.u.data(), f.u.size()) = x.head(f.u.size());
  Eigen::Map<FlowVector<Scalar>>(f.v.data(), f.v.size()) = x.tail(f.v.size());
  return f;
}

}  // namespace detail

/// Descent on the smoothed loss from init, with L-BFGS directions (memory 8)
/// and Armijo backtracking. A trial point is accepted only if it satisfies
/// the Armijo condition on the smoothed loss and does not increase the exact
/// warp_loss total, so trace (recorded after every accepted step) is
/// non-increasing.
template <typename Scalar>
FlowRefinement<Scalar> refine_flow_traced(const ImageGrid<Scalar> &ref, const ImageGrid<Scalar> &target,
                                          const FlowField<Scalar> &init, const FlowEstimationConfig &cfg) {
  cfg.validate();
  require_same_shape(ref, target, "refine_flow");
  require_flow_matches(init, ref, "refine_flow");
  using Vec = detail::FlowVector<Scalar>;
  constexpr double kArmijo = 1e-4;
  constexpr double kShrink = 0.5;
  constexpr int kMaxBacktracks = 40;
  constexpr std::size_t kMemory = 8;
  const Eigen::Index w = ref.cols(), h = ref.rows();

  FlowRefinement<Scalar> out{init, {}, 0};
  WarpLossReport exact = warp_loss(ref, target, out.flow, cfg.lambda1, cfg.kernel);
  out.trace.push_back(exact);
  auto obj = warp_objective(ref, target, out.flow, cfg.lambda1, cfg.charbonnier_eps, cfg.kernel);
  Vec x = detail::pack(out.flow);
  Vec g = detail::pack(obj.gradient);
  std::vector<Vec> s_hist, y_hist;
  std::vector<Scalar> rho_hist;

  for (int it = 0; it < cfg.iterations_per_level; ++it) {
    if (!(g.squaredNorm() > Scalar(0))) break;
    bool accepted = false;
    // Quasi-Newton direction first; fall back to steepest descent once.
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      const bool steepest = attempt == 1 || s_hist.empty();
      if (attempt == 1 && s_hist.empty()) break;
      Vec d;
      double step;
      if (steepest) {
        d = -g;
        step = cfg.step_size;
      } else {
        // Two-loop recursion.
        Vec q = g;
        std::vector<Scalar> a(s_hist.size());
        for (std::size_t i = s_hist.size(); i-- > 0;) {
          a[i] = rho_hist[i] * s_hist[i].dot(q);
          q -= a[i] * y_hist[i];
        }
        q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
          const Scalar b = rho_hist[i] * y_hist[i].dot(q);
          q += (a[i] - b) * s_hist[i];
        }
        d = -q;
        step = 1.0;
      }
      const double slope = double(g.dot(d));
      if (!(slope < 0.0)) {
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
        continue;
      }
      for (int bt = 0; bt < kMaxBacktracks; ++bt, step *= kShrink) {
        const Vec xc = x + Scalar(step) * d;
        FlowField<Scalar> cand = detail::unpack(xc, w, h);
        auto cand_obj = warp_objective(ref, target, cand, cfg.lambda1, cfg.charbonnier_eps, cfg.kernel);
        if (!(cand_obj.value <= obj.value + kArmijo * step * slope)) continue;
        const WarpLossReport cand_exact = warp_loss(ref, target, cand, cfg.lambda1, cfg.kernel);
        if (!(cand_exact.total <= exact.total)) continue;
        const Vec gc = detail::pack(cand_obj.gradient);
        const Vec sk = xc - x, yk = gc - g;
        const Scalar sy = sk.dot(yk);
        if (sy > Scalar(1e-12) * sk.norm() * yk.norm()) {
          if (s_hist.size() == kMemory) {
            s_hist.erase(s_hist.begin());
            y_hist.erase(y_hist.begin());
            rho_hist.erase(rho_hist.begin());
          }
          s_hist.push_back(sk);
          y_hist.push_back(yk);
          rho_hist.push_back(Scalar(1) / sy);
        }
        x = xc;
        g = gc;
        out.flow = std::move(cand);
        obj = std::move(cand_obj);
        exact = cand_exact;
        accepted = true;
        break;
      }
      if (!accepted) {
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
      }
    }
    if (!accepted) break;
    out.trace.push_back(exact);
    ++out.accepted_steps;
  }
  return out;
}

template <typename Scalar>
FlowField<Scalar> refine_flow(const ImageGrid<Scalar> &ref, const ImageGrid<Scalar> &target,
                              const FlowField<Scalar> &init, const FlowEstimationConfig &cfg) {
  return refine_flow_traced(ref, target, init, cfg).flow;
}

template <typename Scalar>
struct PyramidEstimate {
  FlowField<Scalar> flow;
  std::vector<std::vector<WarpLossReport>> level_traces;  // coarsest level first
};

/// Coarse-to-fine estimate of the flow mapping target pixels into ref. Each
/// level halves the resolution; the coarse result is bilinearly upsampled and
/// doubled before refining on the next finer level.
template <typename Scalar>
PyramidEstimate<Scalar> estimate_flow_pyramidal_traced(const ImageGrid<Scalar> &ref, const ImageGrid<Scalar> &target,
                                                       const FlowEstimationConfig &cfg) {
  cfg.validate();
  require_nonempty(ref, "estimate_flow_pyramidal");
  require_same_shape(ref, target, "estimate_flow_pyramidal");
  const Eigen::Index min_side = Eigen::Index(1) << (cfg.pyramid_levels - 1);
  if (ref.cols() < min_side || ref.rows() < min_side) {
    throw DimensionError("estimate_flow_pyramidal: image too small for " + std::to_string(cfg.pyramid_levels) +
                         " pyramid levels");
  }
  std::vector<ImageGrid<Scalar>> refs{ref}, targets{target};
  for (int l = 1; l < cfg.pyramid_levels; ++l) {
    refs.push_back(pyramid_down(refs.back()));
    targets.push_back(pyramid_down(targets.back()));
  }
  PyramidEstimate<Scalar> est{FlowField<Scalar>::zeros(refs.back().cols(), refs.back().rows()), {}};
  for (int l = cfg.pyramid_levels - 1; l >= 0; --l) {
    const auto &r = refs[static_cast<std::size_t>(l)];
    if (est.flow.width() != r.cols() || est.flow.height() != r.rows()) {
      est.flow = pyramid_up_flow(est.flow, r.cols(), r.rows());
    }
    auto refined = refine_flow_traced(r, targets[static_cast<std::size_t>(l)], est.flow, cfg);
    est.flow = std::move(refined.flow);
    est.level_traces.push_back(std::move(refined.trace));
  }
  return est;
}

template <typename Scalar>
FlowField<Scalar> estimate_flow_pyramidal(const ImageGrid<Scalar> &ref, const ImageGrid<Scalar> &target,
                                          const FlowEstimationConfig &cfg) {
  return estimate_flow_pyramidal_traced(ref, target, cfg).flow;
}

}  // namespace spmcsr

#endif  // SPMCSR_FLOW_HPP
