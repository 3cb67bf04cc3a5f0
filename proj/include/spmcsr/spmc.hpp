#ifndef SPMCSR_SPMC_HPP
#define SPMCSR_SPMC_HPP

// Sub-pixel motion compensation layer.
//
// Each LR pixel p is moved by its flow and its coordinates are scaled onto
// the HR grid, x^s_p = alpha * (x_p + u_p), then its value is splatted onto
// the HR pixels q with weights M(x^s_p - x_q) M(y^s_p - y_q). The layer has
// no parameters; spmc_backward returns the analytic sensitivities of a scalar
// loss with respect to the LR image and to both flow components.

#include "spmcsr/core.hpp"
#include "spmcsr/operators.hpp"

#include <cmath>
#include <stdexcept>

namespace spmcsr {

template <typename Scalar>
struct SpmcConfig {
  Scalar alpha = Scalar(1);
  SamplingKernel kernel = SamplingKernel::bilinear();
  // Adds (alpha - 1) / 2 to both grid coordinates. Off by default.
  bool center_aligned = false;

  SpmcConfig() = default;
  explicit SpmcConfig(Scalar a, SamplingKernel k = SamplingKernel::bilinear(), bool centered = false)
      : alpha(a), kernel(k), center_aligned(centered) {
    validate();
  }

  void validate() const {
    if (!(alpha > Scalar(0)) || !std::isfinite(double(alpha))) {
      throw std::invalid_argument("SpmcConfig: alpha must be positive and finite");
    }
  }
};

template <typename Scalar>
struct SpmcGrid {
  ImageGrid<Scalar> xs;
  ImageGrid<Scalar> ys;
};

template <typename Scalar>
struct SpmcGradients {
  ImageGrid<Scalar> d_image;
  ImageGrid<Scalar> d_flow_u;
  ImageGrid<Scalar> d_flow_v;
};

/// HR size for an LR size: round(dim * alpha) on each axis.
template <typename Scalar>
std::pair<Eigen::Index, Eigen::Index> spmc_output_size(Eigen::Index w, Eigen::Index h, const SpmcConfig<Scalar> &cfg) {
  cfg.validate();
  using std::round;
  const auto hw = static_cast<Eigen::Index>(round(double(w) * double(cfg.alpha)));
  const auto hh = static_cast<Eigen::Index>(round(double(h) * double(cfg.alpha)));
  if (hw < 1 || hh < 1) throw DimensionError("spmc: alpha yields an empty HR grid");
  return {hw, hh};
}

template <typename Scalar>
SpmcGrid<Scalar> spmc_grid(const FlowField<Scalar> &flow, const SpmcConfig<Scalar> &cfg) {
  cfg.validate();
  const Scalar a = cfg.alpha;
  const Scalar offset = cfg.center_aligned ? (a - Scalar(1)) / Scalar(2) : Scalar(0);
  SpmcGrid<Scalar> g{ImageGrid<Scalar>(flow.height(), flow.width()), ImageGrid<Scalar>(flow.height(), flow.width())};
  for (Eigen::Index y = 0; y < flow.height(); ++y) {
    for (Eigen::Index x = 0; x < flow.width(); ++x) {
      g.xs(y, x) = a * (Scalar(x) + flow.u(y, x));
      g.ys(y, x) = a * (Scalar(y) + flow.v(y, x));
      if (cfg.center_aligned) {
        g.xs(y, x) += offset;
        g.ys(y, x) += offset;
      }
    }
  }
  return g;
}

template <typename Scalar>
ImageGrid<Scalar> spmc_forward(const ImageGrid<Scalar> &img, const FlowField<Scalar> &flow,
                               const SpmcConfig<Scalar> &cfg) {
  require_nonempty(img, "spmc_forward");
  require_flow_matches(flow, img, "spmc_forward");
  const auto [hw, hh] = spmc_output_size(img.cols(), img.rows(), cfg);
  const auto g = spmc_grid(flow, cfg);
  return splat(img, g.xs, g.ys, hw, hh, cfg.kernel);
}

/// Adjoint of spmc_forward in the image argument: reads the HR grid at every
/// transformed LR coordinate. Equals S W applied to an HR image.
template <typename Scalar>
ImageGrid<Scalar> spmc_adjoint(const ImageGrid<Scalar> &hr, const FlowField<Scalar> &flow,
                               const SpmcConfig<Scalar> &cfg) {
  const auto [hw, hh] = spmc_output_size(flow.width(), flow.height(), cfg);
  if (hr.cols() != hw || hr.rows() != hh) throw DimensionError("spmc_adjoint: HR grid has the wrong size");
  const auto g = spmc_grid(flow, cfg);
  return gather(hr, g.xs, g.ys, cfg.kernel);
}

/// Sensitivities of L given upstream = dL/dJ^H.
///
/// d_image[p]  = sum_q upstream[q] M(x^s_p - x_q) M(y^s_p - y_q)
/// d_flow_u[p] = alpha J_p sum_q upstream[q] M'(x^s_p - x_q) M(y^s_p - y_q)
/// d_flow_v[p] = alpha J_p sum_q upstream[q] M(x^s_p - x_q) M'(y^s_p - y_q)
///
/// The flow sensitivities vanish wherever J_p == 0.
template <typename Scalar>
SpmcGradients<Scalar> spmc_backward(const ImageGrid<Scalar> &img, const FlowField<Scalar> &flow,
                                    const SpmcConfig<Scalar> &cfg, const ImageGrid<Scalar> &upstream) {
  require_nonempty(img, "spmc_backward");
  require_flow_matches(flow, img, "spmc_backward");
  const auto [hw, hh] = spmc_output_size(img.cols(), img.rows(), cfg);
  if (upstream.cols() != hw || upstream.rows() != hh) {
    throw DimensionError("spmc_backward: upstream gradient has the wrong size");
  }
  const auto g = spmc_grid(flow, cfg);
  const SamplingKernel &k = cfg.kernel;
  const int r = k.support();

  SpmcGradients<Scalar> out{ImageGrid<Scalar>::Zero(img.rows(), img.cols()),
                            ImageGrid<Scalar>::Zero(img.rows(), img.cols()),
                            ImageGrid<Scalar>::Zero(img.rows(), img.cols())};
  using std::floor;
  for (Eigen::Index py = 0; py < img.rows(); ++py) {
    for (Eigen::Index px = 0; px < img.cols(); ++px) {
      const Scalar sx = g.xs(py, px);
      const Scalar sy = g.ys(py, px);
      const auto x0 = static_cast<Eigen::Index>(floor(sx));
      const auto y0 = static_cast<Eigen::Index>(floor(sy));
      Scalar acc(0), acc_dx(0), acc_dy(0);
      for (Eigen::Index qy = y0 - r + 1; qy <= y0 + r; ++qy) {
        if (qy < 0 || qy >= hh) continue;
        const Scalar wy = k.value(sy - Scalar(qy));
        const Scalar dwy = k.derivative(sy - Scalar(qy));
        for (Eigen::Index qx = x0 - r + 1; qx <= x0 + r; ++qx) {
          if (qx < 0 || qx >= hw) continue;
          const Scalar wx = k.value(sx - Scalar(qx));
          const Scalar dwx = k.derivative(sx - Scalar(qx));
          const Scalar up = upstream(qy, qx);
          acc += up * (wx * wy);
          acc_dx += up * (dwx * wy);
          acc_dy += up * (wx * dwy);
        }
      }
      const Scalar scale = cfg.alpha * img(py, px);
      out.d_image(py, px) = acc;
      out.d_flow_u(py, px) = scale * acc_dx;
      out.d_flow_v(py, px) = scale * acc_dy;
    }
  }
  return out;
}

/// Splat of the all-ones LR image: the per-HR-pixel weight this frame
/// contributes to the shift-and-add denominator.
template <typename Scalar>
ImageGrid<Scalar> spmc_weight_map(const FlowField<Scalar> &flow, const SpmcConfig<Scalar> &cfg) {
  return spmc_forward(ImageGrid<Scalar>(ImageGrid<Scalar>::Ones(flow.height(), flow.width())), flow, cfg);
}

}  // namespace spmcsr

#endif  // SPMCSR_SPMC_HPP
