#ifndef SPMCSR_RESAMPLE_HPP
#define SPMCSR_RESAMPLE_HPP

// Separable resampling with clamped borders: bicubic resize (antialiased when
// shrinking), the 2x pyramid reduction and flow upsampling used by the
// coarse-to-fine estimator.

#include "spmcsr/core.hpp"
#include "spmcsr/operators.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace spmcsr {

/// How output pixel j maps to input coordinate for a scale s = out / in.
///   Origin: j / s           (HR pixel alpha*p sits on LR pixel p)
///   Center: (j + 0.5) / s - 0.5
enum class GridAlignment { Origin, Center };

namespace detail {

struct AxisTaps {
  std::vector<Eigen::Index> first;
  std::vector<std::vector<double>> weights;  // indexed by input offset from first
};

inline AxisTaps axis_taps(Eigen::Index out_n, double scale, const SamplingKernel &kernel,
                          GridAlignment align, bool antialias) {
  AxisTaps taps;
  taps.first.resize(out_n);
  taps.weights.resize(out_n);
  const double stretch = (antialias && scale < 1.0) ? scale : 1.0;
  const double radius = kernel.support() / stretch;
  for (Eigen::Index j = 0; j < out_n; ++j) {
    const double c = align == GridAlignment::Origin ? double(j) / scale : (double(j) + 0.5) / scale - 0.5;
    const auto lo = static_cast<Eigen::Index>(std::floor(c - radius)) + 1;
    const auto hi = static_cast<Eigen::Index>(std::floor(c + radius));
    std::vector<double> w(static_cast<std::size_t>(std::max<Eigen::Index>(hi - lo + 1, 0)));
    double total = 0.0;
    for (Eigen::Index i = lo; i <= hi; ++i) {
      const double k = kernel.value((c - double(i)) * stretch);
      w[i - lo] = k;
      total += k;
    }
    if (total != 0.0)
      for (double &x : w) x /= total;
    taps.first[j] = lo;
    taps.weights[j] = std::move(w);
  }
  return taps;
}

}  // namespace detail

/// Resizes to out_w x out_h. Border pixels are replicated and weights are
/// normalized, so constant images stay constant.
template <typename Scalar>
ImageGrid<Scalar> resize(const ImageGrid<Scalar> &img, Eigen::Index out_w, Eigen::Index out_h,
                         const SamplingKernel &kernel = SamplingKernel::bicubic(),
                         GridAlignment align = GridAlignment::Center, bool antialias = true) {
  require_nonempty(img, "resize");
  if (out_w < 1 || out_h < 1) throw DimensionError("resize: empty target");
  const Eigen::Index in_w = img.cols(), in_h = img.rows();
  const auto tx = detail::axis_taps(out_w, double(out_w) / double(in_w), kernel, align, antialias);
  const auto ty = detail::axis_taps(out_h, double(out_h) / double(in_h), kernel, align, antialias);

  ImageGrid<Scalar> tmp(in_h, out_w);
  for (Eigen::Index y = 0; y < in_h; ++y)
    for (Eigen::Index x = 0; x < out_w; ++x) {
      Scalar acc(0);
      const auto &w = tx.weights[x];
      for (std::size_t k = 0; k < w.size(); ++k) {
        const Eigen::Index sx = std::clamp<Eigen::Index>(tx.first[x] + Eigen::Index(k), 0, in_w - 1);
        acc += Scalar(w[k]) * img(y, sx);
      }
      tmp(y, x) = acc;
    }
  ImageGrid<Scalar> out(out_h, out_w);
  for (Eigen::Index y = 0; y < out_h; ++y)
    for (Eigen::Index x = 0; x < out_w; ++x) {
      Scalar acc(0);
      const auto &w = ty.weights[y];
      for (std::size_t k = 0; k < w.size(); ++k) {
        const Eigen::Index sy = std::clamp<Eigen::Index>(ty.first[y] + Eigen::Index(k), 0, in_h - 1);
        acc += Scalar(w[k]) * tmp(sy, x);
      }
      out(y, x) = acc;
    }
  return out;
}

/// Bicubic x alpha enlargement.
template <typename Scalar>
ImageGrid<Scalar> upscale_bicubic(const ImageGrid<Scalar> &img, double alpha,
                                  GridAlignment align = GridAlignment::Origin) {
  const auto w = static_cast<Eigen::Index>(std::lround(double(img.cols()) * alpha));
  const auto h = static_cast<Eigen::Index>(std::lround(double(img.rows()) * alpha));
  return resize(img, w, h, SamplingKernel::bicubic(), align, false);
}

/// Gaussian blur with replicated borders.
template <typename Scalar>
ImageGrid<Scalar> blur_replicate(const ImageGrid<Scalar> &img, const BlurSpec &spec) {
  const auto w = spec.taps<Scalar>();
  const int r = spec.radius;
  const Eigen::Index h = img.rows(), wd = img.cols();
  ImageGrid<Scalar> tmp(h, wd), out(h, wd);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < wd; ++x) {
      Scalar acc(0);
      for (int k = -r; k <= r; ++k) acc += w(k + r) * img(y, std::clamp<Eigen::Index>(x + k, 0, wd - 1));
      tmp(y, x) = acc;
    }
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < wd; ++x) {
      Scalar acc(0);
      for (int k = -r; k <= r; ++k) acc += w(k + r) * tmp(std::clamp<Eigen::Index>(y + k, 0, h - 1), x);
      out(y, x) = acc;
    }
  return out;
}

/// One pyramid step: Gaussian prefilter, then keep even samples. Output is
/// ceil(w/2) x ceil(h/2); coarse pixel X sits on fine pixel 2X.
template <typename Scalar>
ImageGrid<Scalar> pyramid_down(const ImageGrid<Scalar> &img) {
  const ImageGrid<Scalar> b = blur_replicate(img, BlurSpec(1.0, 3));
  ImageGrid<Scalar> out((img.rows() + 1) / 2, (img.cols() + 1) / 2);
  for (Eigen::Index y = 0; y < out.rows(); ++y)
    for (Eigen::Index x = 0; x < out.cols(); ++x) out(y, x) = b(2 * y, 2 * x);
  return out;
}

/// Bilinear upsampling of a coarse flow onto a w x h grid, values scaled by 2.
template <typename Scalar>
FlowField<Scalar> pyramid_up_flow(const FlowField<Scalar> &coarse, Eigen::Index w, Eigen::Index h) {
  auto interp = [&](const ImageGrid<Scalar> &c) {
    ImageGrid<Scalar> out(h, w);
    const Eigen::Index cw = c.cols(), ch = c.rows();
    for (Eigen::Index y = 0; y < h; ++y) {
      const double fy = std::min(double(y) / 2.0, double(ch - 1));
      const auto y0 = static_cast<Eigen::Index>(std::floor(fy));
      const Eigen::Index y1 = std::min(y0 + 1, ch - 1);
      const Scalar ty = Scalar(fy - double(y0));
      for (Eigen::Index x = 0; x < w; ++x) {
        const double fx = std::min(double(x) / 2.0, double(cw - 1));
        const auto x0 = static_cast<Eigen::Index>(std::floor(fx));
        const Eigen::Index x1 = std::min(x0 + 1, cw - 1);
        const Scalar tx = Scalar(fx - double(x0));
        const Scalar top = (Scalar(1) - tx) * c(y0, x0) + tx * c(y0, x1);
        const Scalar bot = (Scalar(1) - tx) * c(y1, x0) + tx * c(y1, x1);
        out(y, x) = Scalar(2) * ((Scalar(1) - ty) * top + ty * bot);
      }
    }
    return out;
  };
  return {interp(coarse.u), interp(coarse.v)};
}

}  // namespace spmcsr

#endif  // SPMCSR_RESAMPLE_HPP
