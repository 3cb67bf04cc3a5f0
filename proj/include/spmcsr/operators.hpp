#ifndef SPMCSR_OPERATORS_HPP
#define SPMCSR_OPERATORS_HPP

// Linear operators of the LR imaging model: decimation S, zero-upsampling
// S^T, backward warp W (gather), forward warp W^T (scatter) and Gaussian
// blur K. All use zero padding so that each pair is an exact transpose.

#include "spmcsr/core.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace spmcsr {

struct DecimationFactor {
  int alpha = 1;

  DecimationFactor() = default;
  explicit DecimationFactor(int a) : alpha(a) {
    if (a < 1) throw std::invalid_argument("DecimationFactor: alpha must be >= 1");
  }
};

struct BlurSpec {
  double sigma = 1.0;
  int radius = 3;

  BlurSpec() = default;
  explicit BlurSpec(double s) : BlurSpec(s, static_cast<int>(std::ceil(3.0 * s))) {}
  BlurSpec(double s, int r) : sigma(s), radius(r) {
    if (!(s > 0.0)) throw std::invalid_argument("BlurSpec: sigma must be positive");
    if (r < 0) throw std::invalid_argument("BlurSpec: radius must be non-negative");
  }

  /// Normalized, symmetric taps for offsets -radius..radius.
  template <typename Scalar = double>
  Eigen::Array<Scalar, Eigen::Dynamic, 1> taps() const {
    Eigen::Array<Scalar, Eigen::Dynamic, 1> w(2 * radius + 1);
    for (int k = -radius; k <= radius; ++k) {
      w(k + radius) = Scalar(std::exp(-0.5 * double(k) * double(k) / (sigma * sigma)));
    }
    // Mirror so the taps are bitwise symmetric after normalization.
    const Scalar total = w.sum();
    for (int k = 0; k <= radius; ++k) {
      const Scalar t = w(radius + k) / total;
      w(radius + k) = t;
      w(radius - k) = t;
    }
    return w;
  }
};

/// Keeps every alpha-th sample starting at index 0 on both axes.
template <typename Derived>
ImageGrid<typename Derived::Scalar> decimate(const Eigen::DenseBase<Derived> &img, DecimationFactor f) {
  require_nonempty(img, "decimate");
  const int a = f.alpha;
  if (img.rows() % a != 0 || img.cols() % a != 0) {
    throw DimensionError("decimate: dimensions " + std::to_string(img.cols()) + "x" + std::to_string(img.rows()) +
                         " not divisible by " + std::to_string(a));
  }
  ImageGrid<typename Derived::Scalar> out(img.rows() / a, img.cols() / a);
  for (Eigen::Index y = 0; y < out.rows(); ++y)
    for (Eigen::Index x = 0; x < out.cols(); ++x) out(y, x) = img(a * y, a * x);
  return out;
}

/// Transpose of decimate: places input[p] at alpha*p, zeros elsewhere.
template <typename Derived>
ImageGrid<typename Derived::Scalar> zero_upsample(const Eigen::DenseBase<Derived> &img, DecimationFactor f) {
  const int a = f.alpha;
  ImageGrid<typename Derived::Scalar> out = ImageGrid<typename Derived::Scalar>::Zero(img.rows() * a, img.cols() * a);
  for (Eigen::Index y = 0; y < img.rows(); ++y)
    for (Eigen::Index x = 0; x < img.cols(); ++x) out(a * y, a * x) = img(y, x);
  return out;
}

/// out[p] = sample_at(img, xs[p], ys[p]).
template <typename Scalar>
ImageGrid<Scalar> gather(const ImageGrid<Scalar> &img, const ImageGrid<Scalar> &xs, const ImageGrid<Scalar> &ys,
                         const SamplingKernel &kernel) {
  require_same_shape(xs, ys, "gather");
  ImageGrid<Scalar> out(xs.rows(), xs.cols());
  for (Eigen::Index y = 0; y < xs.rows(); ++y)
    for (Eigen::Index x = 0; x < xs.cols(); ++x) out(y, x) = sample_at(img, xs(y, x), ys(y, x), kernel);
  return out;
}

/// Transpose of gather: each values[p] is spread onto an out_w x out_h grid
/// around (xs[p], ys[p]) with the kernel weights. Portions that land outside
/// the grid are dropped. Sources are visited in row-major order, so the
/// result is deterministic.
template <typename Scalar>
ImageGrid<Scalar> splat(const ImageGrid<Scalar> &values, const ImageGrid<Scalar> &xs, const ImageGrid<Scalar> &ys,
                        Eigen::Index out_w, Eigen::Index out_h, const SamplingKernel &kernel) {
  require_same_shape(values, xs, "splat");
  require_same_shape(values, ys, "splat");
  using std::floor;
  ImageGrid<Scalar> out = ImageGrid<Scalar>::Zero(out_h, out_w);
  const int r = kernel.support();
  for (Eigen::Index py = 0; py < values.rows(); ++py) {
    for (Eigen::Index px = 0; px < values.cols(); ++px) {
      const Scalar v = values(py, px);
      const Scalar sx = xs(py, px);
      const Scalar sy = ys(py, px);
      const auto x0 = static_cast<Eigen::Index>(floor(sx));
      const auto y0 = static_cast<Eigen::Index>(floor(sy));
      for (Eigen::Index qy = y0 - r + 1; qy <= y0 + r; ++qy) {
        if (qy < 0 || qy >= out_h) continue;
        const Scalar wy = kernel.value(sy - Scalar(qy));
        if (wy == Scalar(0)) continue;
        for (Eigen::Index qx = x0 - r + 1; qx <= x0 + r; ++qx) {
          if (qx < 0 || qx >= out_w) continue;
          const Scalar wx = kernel.value(sx - Scalar(qx));
          if (wx == Scalar(0)) continue;
          out(qy, qx) += v * (wx * wy);
        }
      }
    }
  }
  return out;
}

namespace detail {

template <typename Scalar>
std::pair<ImageGrid<Scalar>, ImageGrid<Scalar>> displaced_coords(const FlowField<Scalar> &flow) {
  ImageGrid<Scalar> xs(flow.height(), flow.width());
  ImageGrid<Scalar> ys(flow.height(), flow.width());
  for (Eigen::Index y = 0; y < flow.height(); ++y) {
    for (Eigen::Index x = 0; x < flow.width(); ++x) {
      xs(y, x) = Scalar(x) + flow.u(y, x);
      ys(y, x) = Scalar(y) + flow.v(y, x);
    }
  }
  return {std::move(xs), std::move(ys)};
}

}  // namespace detail

/// W: out[p] = img(x_p + u_p, y_p + v_p).
template <typename Scalar>
ImageGrid<Scalar> backward_warp(const ImageGrid<Scalar> &img, const FlowField<Scalar> &flow,
                                const SamplingKernel &kernel = SamplingKernel::bilinear()) {
  require_nonempty(img, "backward_warp");
  require_flow_matches(flow, img, "backward_warp");
  const auto [xs, ys] = detail::displaced_coords(flow);
  return gather(img, xs, ys, kernel);
}

/// W^T: every source pixel is splatted at (x_p + u_p, y_p + v_p).
template <typename Scalar>
ImageGrid<Scalar> forward_warp(const ImageGrid<Scalar> &img, const FlowField<Scalar> &flow,
                               const SamplingKernel &kernel = SamplingKernel::bilinear()) {
  require_nonempty(img, "forward_warp");
  require_flow_matches(flow, img, "forward_warp");
  const auto [xs, ys] = detail::displaced_coords(flow);
  return splat(img, xs, ys, img.cols(), img.rows(), kernel);
}

/// Separable truncated Gaussian with zero padding.
template <typename Scalar>
ImageGrid<Scalar> gaussian_blur(const ImageGrid<Scalar> &img, const BlurSpec &spec) {
  const auto w = spec.taps<Scalar>();
  const int r = spec.radius;
  const Eigen::Index h = img.rows(), wd = img.cols();
  ImageGrid<Scalar> tmp = ImageGrid<Scalar>::Zero(h, wd);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < wd; ++x) {
      Scalar acc(0);
      for (int k = -r; k <= r; ++k) {
        const Eigen::Index sx = x + k;
        if (sx >= 0 && sx < wd) acc += w(k + r) * img(y, sx);
      }
      tmp(y, x) = acc;
    }
  ImageGrid<Scalar> out = ImageGrid<Scalar>::Zero(h, wd);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < wd; ++x) {
      Scalar acc(0);
      for (int k = -r; k <= r; ++k) {
        const Eigen::Index sy = y + k;
        if (sy >= 0 && sy < h) acc += w(k + r) * tmp(sy, x);
      }
      out(y, x) = acc;
    }
  return out;
}

enum class OperatorKind { Decimate, ZeroUpsample, BackwardWarp, ForwardWarp, Blur };

template <typename Scalar>
struct OperatorSpec {
  OperatorKind kind = OperatorKind::Decimate;
  DecimationFactor factor{};
  FlowField<Scalar> flow{};
  SamplingKernel kernel = SamplingKernel::bilinear();
  BlurSpec blur{};
};

inline constexpr Eigen::Index kMaxMaterializedSide = 16;

/// Dense matrix of a linear image operator acting on row-major vectorized
/// grids of size in_w x in_h. Column j is op applied to the j-th basis image.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> materialize(
    const std::function<ImageGrid<Scalar>(const ImageGrid<Scalar> &)> &op, Eigen::Index in_w, Eigen::Index in_h) {
  if (in_w > kMaxMaterializedSide || in_h > kMaxMaterializedSide || in_w < 1 || in_h < 1) {
    throw DimensionError("materialize: grid must be between 1x1 and 16x16");
  }
  const Eigen::Index n = in_w * in_h;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m;
  ImageGrid<Scalar> basis = ImageGrid<Scalar>::Zero(in_h, in_w);
  for (Eigen::Index j = 0; j < n; ++j) {
    basis.data()[j] = Scalar(1);
    const ImageGrid<Scalar> col = op(basis);
    basis.data()[j] = Scalar(0);
    if (col.cols() > kMaxMaterializedSide || col.rows() > kMaxMaterializedSide) {
      throw DimensionError("materialize: output grid exceeds 16x16");
    }
    if (j == 0) m.setZero(col.size(), n);
    m.col(j) = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(col.data(), col.size());
  }
  return m;
}

/// materialize() for one of the named model operators. For the warps the
/// grid size is taken from the flow.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> materialize_operator(const OperatorSpec<Scalar> &spec,
                                                                            Eigen::Index in_w, Eigen::Index in_h) {
  switch (spec.kind) {
    case OperatorKind::Decimate:
      return materialize<Scalar>([&](const ImageGrid<Scalar> &x) { return decimate(x, spec.factor); }, in_w, in_h);
    case OperatorKind::ZeroUpsample:
      return materialize<Scalar>([&](const ImageGrid<Scalar> &x) { return zero_upsample(x, spec.factor); }, in_w,
                                 in_h);
    case OperatorKind::BackwardWarp:
      return materialize<Scalar>(
          [&](const ImageGrid<Scalar> &x) { return backward_warp(x, spec.flow, spec.kernel); }, spec.flow.width(),
          spec.flow.height());
    case OperatorKind::ForwardWarp:
      return materialize<Scalar>(
          [&](const ImageGrid<Scalar> &x) { return forward_warp(x, spec.flow, spec.kernel); }, spec.flow.width(),
          spec.flow.height());
    case OperatorKind::Blur:
      return materialize<Scalar>([&](const ImageGrid<Scalar> &x) { return gaussian_blur(x, spec.blur); }, in_w, in_h);
  }
  throw std::invalid_argument("materialize_operator: unknown operator");
}

}  // namespace spmcsr

#endif  // SPMCSR_OPERATORS_HPP
