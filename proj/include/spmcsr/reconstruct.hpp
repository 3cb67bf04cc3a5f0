#ifndef SPMCSR_RECONSTRUCT_HPP
#define SPMCSR_RECONSTRUCT_HPP

// Classical multi-frame HR reconstruction.
//
// Shift-and-add divides the accumulated SPMC splats of all frames by the
// accumulated splat of all-ones images. The normal-equations route solves
//
//   (sum_i W_i^T S^T S W_i + eps I) x = sum_i W_i^T S^T I_i
//
// matrix-free by conjugate gradients, with W_i^T S^T realized by the SPMC
// splat and S W_i by its adjoint gather.

#include "spmcsr/cg.hpp"
#include "spmcsr/core.hpp"
#include "spmcsr/operators.hpp"
#include "spmcsr/resample.hpp"
#include "spmcsr/spmc.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace spmcsr {

enum class Alignment { Spmc, BackwardWarp };
enum class Solver { ShiftAndAdd, ConjugateGradient };
enum class HoleFill { Zero, BicubicReference };

inline constexpr double kHoleThreshold = 1e-8;

struct ReconstructionConfig {
  double alpha = 2.0;
  Alignment alignment = Alignment::Spmc;
  Solver solver = Solver::ShiftAndAdd;
  double tikhonov_eps = 1e-3;
  int cg_max_iters = 200;
  double cg_tolerance = 1e-10;
  HoleFill hole_fill = HoleFill::BicubicReference;
  SamplingKernel kernel = SamplingKernel::bilinear();
  bool center_aligned = false;

  void validate() const {
    if (!(alpha >= 1.0)) throw std::invalid_argument("ReconstructionConfig: alpha must be >= 1");
    if (!(cg_tolerance > 0.0)) throw std::invalid_argument("ReconstructionConfig: cg_tolerance must be > 0");
    if (!(tikhonov_eps >= 0.0)) throw std::invalid_argument("ReconstructionConfig: tikhonov_eps must be >= 0");
    if (cg_max_iters < 0) throw std::invalid_argument("ReconstructionConfig: negative cg_max_iters");
  }

  template <typename Scalar>
  SpmcConfig<Scalar> spmc() const {
    return SpmcConfig<Scalar>(Scalar(alpha), kernel, center_aligned);
  }
  GridAlignment grid() const { return center_aligned ? GridAlignment::Center : GridAlignment::Origin; }
};

template <typename Scalar>
struct AlignedStack {
  std::vector<ImageGrid<Scalar>> frames;
  std::vector<ImageGrid<Scalar>> weights;
  ImageGrid<Scalar> reference_upsampled;
};

/// One flow per frame. Accepts either one entry per frame (the reference
/// entry is replaced by zero flow) or one entry per non-reference frame in
/// frame order.
template <typename Scalar>
std::vector<FlowField<Scalar>> per_frame_flows(const Sequence<Scalar> &seq, const std::vector<FlowField<Scalar>> &flows) {
  std::vector<FlowField<Scalar>> out;
  out.reserve(seq.size());
  if (flows.size() == seq.size()) {
    out = flows;
  } else if (flows.size() + 1 == seq.size()) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      out.push_back(i == seq.reference_index() ? FlowField<Scalar>::zeros(seq.width(), seq.height()) : flows[k++]);
    }
  } else {
    throw std::invalid_argument("reconstruct: got " + std::to_string(flows.size()) + " flows for " +
                                std::to_string(seq.size()) + " frames");
  }
  out[seq.reference_index()] = FlowField<Scalar>::zeros(seq.width(), seq.height());
  for (const auto &f : out) require_flow_matches(f, seq.reference(), "reconstruct");
  return out;
}

/// SPMC mode expects flows F_{i->0}; BW mode expects F_{0->i} and aligns by
/// LR backward warping followed by bicubic enlargement, with unit weights.
template <typename Scalar>
AlignedStack<Scalar> align_stack(const Sequence<Scalar> &seq, const std::vector<FlowField<Scalar>> &flows,
                                 const ReconstructionConfig &cfg) {
  cfg.validate();
  const auto all = per_frame_flows(seq, flows);
  AlignedStack<Scalar> stack;
  stack.reference_upsampled = upscale_bicubic(seq.reference(), cfg.alpha, cfg.grid());
  const auto spmc_cfg = cfg.spmc<Scalar>();
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (cfg.alignment == Alignment::Spmc) {
      stack.frames.push_back(spmc_forward(seq[i], all[i], spmc_cfg));
      stack.weights.push_back(spmc_weight_map(all[i], spmc_cfg));
    } else {
      stack.frames.push_back(upscale_bicubic(backward_warp(seq[i], all[i], cfg.kernel), cfg.alpha, cfg.grid()));
      stack.weights.push_back(ImageGrid<Scalar>::Ones(stack.frames.back().rows(), stack.frames.back().cols()));
    }
  }
  return stack;
}

template <typename Scalar>
ImageGrid<Scalar> shift_and_add(const AlignedStack<Scalar> &stack, const ReconstructionConfig &cfg) {
  if (stack.frames.empty()) throw std::invalid_argument("shift_and_add: empty stack");
  if (stack.weights.size() != stack.frames.size()) throw std::invalid_argument("shift_and_add: weights/frames mismatch");
  ImageGrid<Scalar> num = ImageGrid<Scalar>::Zero(stack.frames[0].rows(), stack.frames[0].cols());
  ImageGrid<Scalar> den = num;
  for (std::size_t i = 0; i < stack.frames.size(); ++i) {
    require_same_shape(stack.frames[i], num, "shift_and_add");
    require_same_shape(stack.weights[i], num, "shift_and_add");
    num += stack.frames[i];
    den += stack.weights[i];
  }
  const bool bicubic_fill = cfg.hole_fill == HoleFill::BicubicReference;
  if (bicubic_fill) require_same_shape(stack.reference_upsampled, num, "shift_and_add");
  ImageGrid<Scalar> out(num.rows(), num.cols());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (den.data()[i] > Scalar(kHoleThreshold)) {
      out.data()[i] = num.data()[i] / den.data()[i];
    } else {
      out.data()[i] = bicubic_fill ? stack.reference_upsampled.data()[i] : Scalar(0);
    }
  }
  return out;
}

/// Fraction of HR pixels whose accumulated weight exceeds the hole threshold.
template <typename Scalar>
double coverage(const AlignedStack<Scalar> &stack) {
  ImageGrid<Scalar> den = ImageGrid<Scalar>::Zero(stack.weights.at(0).rows(), stack.weights.at(0).cols());
  for (const auto &w : stack.weights) den += w;
  return double((den > Scalar(kHoleThreshold)).count()) / double(den.size());
}

template <typename Scalar>
struct NormalEquationsResult {
  ImageGrid<Scalar> image;
  CgResult<Scalar> cg;
};

/// Applies A = sum_i W_i^T S^T S W_i + eps I to an HR image.
template <typename Scalar>
ImageGrid<Scalar> apply_normal_operator(const ImageGrid<Scalar> &x, const std::vector<FlowField<Scalar>> &flows,
                                        const SpmcConfig<Scalar> &spmc_cfg, double eps) {
  ImageGrid<Scalar> out = Scalar(eps) * x;
  for (const auto &f : flows) out += spmc_forward(spmc_adjoint(x, f, spmc_cfg), f, spmc_cfg);
  return out;
}

/// Solves the normal equations with flows F_{i->0}. A result is returned even
/// when CG stops before reaching the tolerance; check cg.converged.
template <typename Scalar>
NormalEquationsResult<Scalar> solve_normal_equations(const Sequence<Scalar> &seq,
                                                     const std::vector<FlowField<Scalar>> &flows,
                                                     const ReconstructionConfig &cfg) {
  cfg.validate();
  if (cfg.alignment != Alignment::Spmc) {
    throw std::invalid_argument("solve_normal_equations: requires SPMC alignment");
  }
  const auto all = per_frame_flows(seq, flows);
  const auto spmc_cfg = cfg.spmc<Scalar>();
  const auto [hw, hh] = spmc_output_size(seq.width(), seq.height(), spmc_cfg);
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  ImageGrid<Scalar> rhs = ImageGrid<Scalar>::Zero(hh, hw);
  for (std::size_t i = 0; i < seq.size(); ++i) rhs += spmc_forward(seq[i], all[i], spmc_cfg);

  auto apply = [&](const Vec &v) -> Vec {
    const ImageGrid<Scalar> x = Eigen::Map<const ImageGrid<Scalar>>(v.data(), hh, hw);
    const ImageGrid<Scalar> ax = apply_normal_operator(x, all, spmc_cfg, cfg.tikhonov_eps);
    return Eigen::Map<const Vec>(ax.data(), ax.size());
  };
  NormalEquationsResult<Scalar> res;
  res.cg = conjugate_gradient<Scalar>(apply, Eigen::Map<const Vec>(rhs.data(), rhs.size()), cfg.cg_max_iters,
                                      cfg.cg_tolerance);
  res.image = Eigen::Map<const ImageGrid<Scalar>>(res.cg.x.data(), hh, hw);
  return res;
}

/// Full pipeline for one configuration. flows_to_ref (F_{i->0}) drive SPMC
/// alignment, flows_from_ref (F_{0->i}) drive BW alignment.
template <typename Scalar>
ImageGrid<Scalar> reconstruct(const Sequence<Scalar> &seq, const std::vector<FlowField<Scalar>> &flows_to_ref,
                              const std::vector<FlowField<Scalar>> &flows_from_ref, const ReconstructionConfig &cfg) {
  if (cfg.solver == Solver::ConjugateGradient) return solve_normal_equations(seq, flows_to_ref, cfg).image;
  const auto &flows = cfg.alignment == Alignment::Spmc ? flows_to_ref : flows_from_ref;
  return shift_and_add(align_stack(seq, flows, cfg), cfg);
}

/// kappa_i for i = -T..T, linear from 0.5 to 1.0; T = 0 gives {1.0}.
inline std::vector<double> sr_time_weights(int half_span) {
  if (half_span < 0) throw std::invalid_argument("sr_time_weights: negative half-span");
  if (half_span == 0) return {1.0};
  std::vector<double> k;
  for (int i = -half_span; i <= half_span; ++i) k.push_back(0.5 + 0.5 * double(i + half_span) / double(2 * half_span));
  return k;
}

template <typename Scalar>
double weighted_sr_loss(const std::vector<ImageGrid<Scalar>> &outputs, const ImageGrid<Scalar> &truth, int half_span) {
  const auto kappa = sr_time_weights(half_span);
  if (outputs.size() != kappa.size()) {
    throw std::invalid_argument("weighted_sr_loss: expected " + std::to_string(kappa.size()) + " outputs");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    require_same_shape(outputs[i], truth, "weighted_sr_loss");
    loss += kappa[i] * double((truth - outputs[i]).square().sum());
  }
  return loss;
}

inline constexpr double kDefaultLambda2 = 0.01;

inline double total_loss(double sr_loss, double me_loss, double lambda2 = kDefaultLambda2) {
  if (sr_loss < 0.0 || me_loss < 0.0 || lambda2 < 0.0) throw std::invalid_argument("total_loss: negative input");
  return sr_loss + lambda2 * me_loss;
}

}  // namespace spmcsr

#endif  // SPMCSR_RECONSTRUCT_HPP
