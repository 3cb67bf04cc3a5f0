#ifndef SPMCSR_EVALDATA_HPP
#define SPMCSR_EVALDATA_HPP

// Synthetic data following the LR imaging model, the bicubic degradation
// chain, and PSNR / SSIM.

#include "spmcsr/core.hpp"
#include "spmcsr/operators.hpp"
#include "spmcsr/resample.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace spmcsr {

enum class DegradationMethod { BicubicChain, ExactModel };

struct DegradationSpec {
  int alpha = 4;
  DegradationMethod method = DegradationMethod::BicubicChain;
  std::optional<BlurSpec> blur;  // ExactModel only
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (alpha < 1) throw std::invalid_argument("DegradationSpec: alpha must be >= 1");
    if (method == DegradationMethod::BicubicChain && (alpha < 2 || alpha > 4)) {
      throw std::invalid_argument("DegradationSpec: bicubic chain supports alpha in {2, 3, 4}");
    }
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("DegradationSpec: noise_sigma must be >= 0");
  }
};

template <typename Scalar>
void add_gaussian_noise(ImageGrid<Scalar> &img, double sigma, std::uint64_t seed) {
  if (sigma == 0.0) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] += Scalar(n(rng));
}

/// HR -> LR by antialiased bicubic shrinking (or S K for ExactModel), plus
/// seeded Gaussian noise when noise_sigma > 0.
template <typename Scalar>
ImageGrid<Scalar> degrade(const ImageGrid<Scalar> &hr, const DegradationSpec &spec) {
  spec.validate();
  require_nonempty(hr, "degrade");
  if (hr.cols() % spec.alpha != 0 || hr.rows() % spec.alpha != 0) {
    throw DimensionError("degrade: dimensions " + std::to_string(hr.cols()) + "x" + std::to_string(hr.rows()) +
                         " not divisible by " + std::to_string(spec.alpha));
  }
  ImageGrid<Scalar> lr;
  if (spec.method == DegradationMethod::BicubicChain) {
    lr = resize(hr, hr.cols() / spec.alpha, hr.rows() / spec.alpha, SamplingKernel::bicubic(), GridAlignment::Center,
                true);
  } else {
    lr = decimate(spec.blur ? gaussian_blur(hr, *spec.blur) : hr, DecimationFactor(spec.alpha));
  }
  add_gaussian_noise(lr, spec.noise_sigma, spec.seed);
  return lr;
}

template <typename Scalar>
ImageGrid<Scalar> degrade_bicubic(const ImageGrid<Scalar> &hr, const DegradationSpec &spec) {
  DegradationSpec s = spec;
  s.method = DegradationMethod::BicubicChain;
  return degrade(hr, s);
}

enum class ShiftRegime { IntegerHr, Interpolated };

/// shifted(X, Y) = img(X + sx, Y + sy), zero outside. Integer shifts move
/// indices exactly; fractional shifts use bicubic interpolation.
template <typename Scalar>
std::pair<ImageGrid<Scalar>, ShiftRegime> shift_image(const ImageGrid<Scalar> &img, double sx, double sy) {
  const double rx = std::round(sx), ry = std::round(sy);
  const Eigen::Index w = img.cols(), h = img.rows();
  ImageGrid<Scalar> out = ImageGrid<Scalar>::Zero(h, w);
  if (std::abs(sx - rx) < 1e-9 && std::abs(sy - ry) < 1e-9) {
    const auto ix = static_cast<Eigen::Index>(rx), iy = static_cast<Eigen::Index>(ry);
    for (Eigen::Index y = 0; y < h; ++y)
      for (Eigen::Index x = 0; x < w; ++x) {
        const Eigen::Index srcx = x + ix, srcy = y + iy;
        if (srcx >= 0 && srcx < w && srcy >= 0 && srcy < h) out(y, x) = img(srcy, srcx);
      }
    return {std::move(out), ShiftRegime::IntegerHr};
  }
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x)
      out(y, x) = sample_at(img, Scalar(double(x) + sx), Scalar(double(y) + sy), SamplingKernel::bicubic());
  return {std::move(out), ShiftRegime::Interpolated};
}

template <typename Scalar>
struct SyntheticSequenceSpec {
  ImageGrid<Scalar> hr_source;
  std::vector<std::pair<double, double>> shifts;  // LR pixels; shifts[0] must be (0, 0)
  int alpha = 2;
  std::optional<BlurSpec> blur;
};

template <typename Scalar>
struct SyntheticSequence {
  Sequence<Scalar> sequence;
  std::vector<FlowField<Scalar>> flows_to_ref;    // F_{i->0}, constant (dx_i, dy_i)
  std::vector<FlowField<Scalar>> flows_from_ref;  // F_{0->i}, constant (-dx_i, -dy_i)
  std::vector<ShiftRegime> regimes;
  bool exact = true;  // every HR shift is integer
};

/// frame_i = S (K) shift(hr, alpha dx_i, alpha dy_i).
template <typename Scalar>
SyntheticSequence<Scalar> make_exact_sequence(const SyntheticSequenceSpec<Scalar> &spec) {
  if (spec.shifts.empty()) throw std::invalid_argument("make_exact_sequence: no shifts");
  if (spec.shifts.front().first != 0.0 || spec.shifts.front().second != 0.0) {
    throw std::invalid_argument("make_exact_sequence: first shift must be (0, 0)");
  }
  require_nonempty(spec.hr_source, "make_exact_sequence");
  const DecimationFactor f(spec.alpha);
  const Eigen::Index w = spec.hr_source.cols() / spec.alpha, h = spec.hr_source.rows() / spec.alpha;
  std::vector<ImageGrid<Scalar>> frames;
  std::vector<FlowField<Scalar>> to_ref, from_ref;
  std::vector<ShiftRegime> regimes;
  bool exact = true;
  for (const auto &[dx, dy] : spec.shifts) {
    const double sx = spec.alpha * dx, sy = spec.alpha * dy;
    if (std::abs(sx) >= double(spec.hr_source.cols()) || std::abs(sy) >= double(spec.hr_source.rows())) {
      throw std::invalid_argument("make_exact_sequence: shift larger than the image");
    }
    auto [shifted, regime] = shift_image(spec.hr_source, sx, sy);
    if (spec.blur) shifted = gaussian_blur(shifted, *spec.blur);
    frames.push_back(decimate(shifted, f));
    to_ref.push_back(FlowField<Scalar>::constant(w, h, Scalar(dx), Scalar(dy)));
    from_ref.push_back(FlowField<Scalar>::constant(w, h, Scalar(-dx), Scalar(-dy)));
    regimes.push_back(regime);
    exact = exact && regime == ShiftRegime::IntegerHr;
  }
  return {Sequence<Scalar>(std::move(frames), 0), std::move(to_ref), std::move(from_ref), std::move(regimes), exact};
}

/// Shifts {(i/alpha, j/alpha)} for i, j in [0, alpha), reference first.
inline std::vector<std::pair<double, double>> phase_covering_shifts(int alpha) {
  std::vector<std::pair<double, double>> s;
  for (int j = 0; j < alpha; ++j)
    for (int i = 0; i < alpha; ++i) s.emplace_back(double(i) / alpha, double(j) / alpha);
  return s;
}

/// Blurred uniform noise stretched to [0, 1].
inline Image random_texture(Eigen::Index w, Eigen::Index h, std::uint64_t seed, double blur_sigma = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = u(rng);
  if (blur_sigma > 0.0) img = blur_replicate(img, BlurSpec(blur_sigma));
  const double lo = img.minCoeff(), hi = img.maxCoeff();
  if (hi > lo) img = (img - lo) / (hi - lo);
  return img;
}

inline constexpr double kPsnrCap = 99.0;

template <typename Scalar>
double psnr(const ImageGrid<Scalar> &a, const ImageGrid<Scalar> &b, double peak = 1.0) {
  require_same_shape(a, b, "psnr");
  require_nonempty(a, "psnr");
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
  const double mse = double((a - b).square().mean());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

namespace detail {

template <typename Scalar>
ImageGrid<Scalar> filter_valid(const ImageGrid<Scalar> &img, const Eigen::Array<Scalar, Eigen::Dynamic, 1> &w) {
  const auto n = w.size();
  const Eigen::Index oh = img.rows() - n + 1, ow = img.cols() - n + 1;
  ImageGrid<Scalar> tmp(img.rows(), ow);
  for (Eigen::Index y = 0; y < img.rows(); ++y)
    for (Eigen::Index x = 0; x < ow; ++x) {
      Scalar acc(0);
      for (Eigen::Index k = 0; k < n; ++k) acc += w(k) * img(y, x + k);
      tmp(y, x) = acc;
    }
  ImageGrid<Scalar> out(oh, ow);
  for (Eigen::Index y = 0; y < oh; ++y)
    for (Eigen::Index x = 0; x < ow; ++x) {
      Scalar acc(0);
      for (Eigen::Index k = 0; k < n; ++k) acc += w(k) * tmp(y + k, x);
      out(y, x) = acc;
    }
  return out;
}

}  // namespace detail

/// Mean SSIM over all fully contained 11x11 Gaussian windows (sigma 1.5).
template <typename Scalar>
double ssim(const ImageGrid<Scalar> &a, const ImageGrid<Scalar> &b, double dynamic_range = 1.0) {
  require_same_shape(a, b, "ssim");
  constexpr int kWindow = 11;
  if (a.rows() < kWindow || a.cols() < kWindow) throw DimensionError("ssim: image smaller than the 11x11 window");
  const auto w = BlurSpec(1.5, kWindow / 2).taps<Scalar>();
  const Scalar c1 = Scalar((0.01 * dynamic_range) * (0.01 * dynamic_range));
  const Scalar c2 = Scalar((0.03 * dynamic_range) * (0.03 * dynamic_range));

  const ImageGrid<Scalar> mu_a = detail::filter_valid(a, w);
  const ImageGrid<Scalar> mu_b = detail::filter_valid(b, w);
  const ImageGrid<Scalar> aa = detail::filter_valid(ImageGrid<Scalar>(a * a), w);
  const ImageGrid<Scalar> bb = detail::filter_valid(ImageGrid<Scalar>(b * b), w);
  const ImageGrid<Scalar> ab = detail::filter_valid(ImageGrid<Scalar>(a * b), w);

  double total = 0.0;
  for (Eigen::Index i = 0; i < mu_a.size(); ++i) {
    const Scalar ma = mu_a.data()[i], mb = mu_b.data()[i];
    const Scalar va = aa.data()[i] - ma * ma;
    const Scalar vb = bb.data()[i] - mb * mb;
    const Scalar cov = ab.data()[i] - ma * mb;
    const Scalar num = (Scalar(2) * (ma * mb) + c1) * (Scalar(2) * cov + c2);
    const Scalar den = (ma * ma + mb * mb + c1) * (va + vb + c2);
    total += double(num / den);
  }
  return total / double(mu_a.size());
}

template <typename Scalar>
ImageGrid<Scalar> crop_border(const ImageGrid<Scalar> &img, Eigen::Index border) {
  if (border < 0 || 2 * border >= std::min(img.rows(), img.cols())) {
    throw DimensionError("crop_border: border " + std::to_string(border) + " too large");
  }
  return img.block(border, border, img.rows() - 2 * border, img.cols() - 2 * border);
}

}  // namespace spmcsr

#endif  // SPMCSR_EVALDATA_HPP
