#ifndef SPMCSR_CORE_HPP
#define SPMCSR_CORE_HPP

// Grid and flow carriers shared by every module.
//
// Pixel p has integer coordinates (x, y) with the origin at the top-left,
// x growing rightward and y growing downward. Images are row-major Eigen
// arrays indexed as img(y, x), so rows() is the height and cols() the width.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spmcsr {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
using ImageGrid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Image = ImageGrid<double>;

template <typename Derived>
inline Eigen::Index width(const Eigen::DenseBase<Derived> &img) { return img.cols(); }

template <typename Derived>
inline Eigen::Index height(const Eigen::DenseBase<Derived> &img) { return img.rows(); }

template <typename Derived>
inline bool all_finite(const Eigen::DenseBase<Derived> &img) {
  return img.derived().array().isFinite().all();
}

template <typename DerivedA, typename DerivedB>
inline bool same_shape(const Eigen::DenseBase<DerivedA> &a, const Eigen::DenseBase<DerivedB> &b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

template <typename Derived>
inline void require_nonempty(const Eigen::DenseBase<Derived> &img, const char *what) {
  if (img.rows() < 1 || img.cols() < 1) {
    throw DimensionError(std::string(what) + ": image must be at least 1x1");
  }
}

template <typename DerivedA, typename DerivedB>
inline void require_same_shape(const Eigen::DenseBase<DerivedA> &a, const Eigen::DenseBase<DerivedB> &b,
                               const char *what) {
  if (!same_shape(a, b)) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.cols()) + "x" +
                         std::to_string(a.rows()) + " vs " + std::to_string(b.cols()) + "x" +
                         std::to_string(b.rows()) + ")");
  }
}

/// Per-pixel displacement (u, v) in source-grid pixels.
template <typename Scalar>
struct FlowField {
  ImageGrid<Scalar> u;
  ImageGrid<Scalar> v;

  FlowField() = default;
  FlowField(ImageGrid<Scalar> u_, ImageGrid<Scalar> v_) : u(std::move(u_)), v(std::move(v_)) {
    require_same_shape(u, v, "FlowField");
  }

  static FlowField zeros(Eigen::Index w, Eigen::Index h) {
    return {ImageGrid<Scalar>::Zero(h, w), ImageGrid<Scalar>::Zero(h, w)};
  }
  static FlowField constant(Eigen::Index w, Eigen::Index h, Scalar du, Scalar dv) {
    return {ImageGrid<Scalar>::Constant(h, w, du), ImageGrid<Scalar>::Constant(h, w, dv)};
  }

  Eigen::Index width() const { return u.cols(); }
  Eigen::Index height() const { return u.rows(); }
  bool finite() const { return all_finite(u) && all_finite(v); }

  FlowField operator-() const { return {ImageGrid<Scalar>(-u), ImageGrid<Scalar>(-v)}; }
};

using Flow = FlowField<double>;

template <typename Scalar, typename Derived>
inline void require_flow_matches(const FlowField<Scalar> &flow, const Eigen::DenseBase<Derived> &img,
                                 const char *what) {
  if (flow.width() != img.cols() || flow.height() != img.rows()) {
    throw DimensionError(std::string(what) + ": flow dimensions do not match image");
  }
}

/// Ordered frames of equal size with a designated reference frame.
template <typename Scalar>
class Sequence {
 public:
  Sequence(std::vector<ImageGrid<Scalar>> frames, std::size_t reference_index)
      : frames_(std::move(frames)), reference_(reference_index) {
    if (frames_.empty()) throw std::invalid_argument("Sequence: no frames");
    if (reference_ >= frames_.size()) throw std::invalid_argument("Sequence: reference index out of range");
    require_nonempty(frames_.front(), "Sequence");
    for (const auto &f : frames_) require_same_shape(f, frames_.front(), "Sequence");
  }

  std::size_t size() const { return frames_.size(); }
  std::size_t reference_index() const { return reference_; }
  const ImageGrid<Scalar> &reference() const { return frames_[reference_]; }
  const ImageGrid<Scalar> &operator[](std::size_t i) const { return frames_[i]; }
  const std::vector<ImageGrid<Scalar>> &frames() const { return frames_; }
  Eigen::Index width() const { return frames_.front().cols(); }
  Eigen::Index height() const { return frames_.front().rows(); }

 private:
  std::vector<ImageGrid<Scalar>> frames_;
  std::size_t reference_;
};

enum class KernelKind { Bilinear, Bicubic };

/// Separable interpolation kernel. Bilinear is max(0, 1-|x|); bicubic is the
/// Keys cubic with a = -0.5.
struct SamplingKernel {
  KernelKind kind = KernelKind::Bilinear;

  static constexpr SamplingKernel bilinear() { return {KernelKind::Bilinear}; }
  static constexpr SamplingKernel bicubic() { return {KernelKind::Bicubic}; }

  constexpr int support() const { return kind == KernelKind::Bilinear ? 1 : 2; }

  template <typename Scalar>
  Scalar value(Scalar x) const {
    using std::abs;
    const Scalar t = abs(x);
    if (kind == KernelKind::Bilinear) return t < Scalar(1) ? Scalar(1) - t : Scalar(0);
    constexpr double a = -0.5;
    if (t <= Scalar(1)) return ((Scalar(a + 2) * t - Scalar(a + 3)) * t) * t + Scalar(1);
    if (t < Scalar(2)) return ((Scalar(a) * t - Scalar(5 * a)) * t + Scalar(8 * a)) * t - Scalar(4 * a);
    return Scalar(0);
  }

  /// Slope of value(). For bilinear the kinks at |x| in {0, 1} get slope 0.
  template <typename Scalar>
  Scalar derivative(Scalar x) const {
    using std::abs;
    const Scalar t = abs(x);
    const Scalar sign = x > Scalar(0) ? Scalar(1) : (x < Scalar(0) ? Scalar(-1) : Scalar(0));
    if (kind == KernelKind::Bilinear) return (t > Scalar(0) && t < Scalar(1)) ? -sign : Scalar(0);
    constexpr double a = -0.5;
    if (t <= Scalar(1)) return sign * (Scalar(3 * (a + 2)) * t - Scalar(2 * (a + 3))) * t;
    if (t < Scalar(2)) return sign * ((Scalar(3 * a) * t - Scalar(10 * a)) * t + Scalar(8 * a));
    return Scalar(0);
  }
};

/// Kernel-weighted sum of the pixels around (x, y). Pixels outside the image
/// read as zero.
template <typename Derived>
typename Derived::Scalar sample_at(const Eigen::DenseBase<Derived> &img, typename Derived::Scalar x,
                                   typename Derived::Scalar y, const SamplingKernel &kernel) {
  using Scalar = typename Derived::Scalar;
  using std::floor;
  const int r = kernel.support();
  const auto x0 = static_cast<Eigen::Index>(floor(x));
  const auto y0 = static_cast<Eigen::Index>(floor(y));
  Scalar acc(0);
  for (Eigen::Index iy = y0 - r + 1; iy <= y0 + r; ++iy) {
    if (iy < 0 || iy >= img.rows()) continue;
    const Scalar wy = kernel.value(y - Scalar(iy));
    if (wy == Scalar(0)) continue;
    for (Eigen::Index ix = x0 - r + 1; ix <= x0 + r; ++ix) {
      if (ix < 0 || ix >= img.cols()) continue;
      const Scalar wx = kernel.value(x - Scalar(ix));
      if (wx == Scalar(0)) continue;
      acc += img(iy, ix) * (wx * wy);
    }
  }
  return acc;
}

/// BT.601 luma, clamped to [0, 1].
template <typename Scalar>
ImageGrid<Scalar> to_luminance(const ImageGrid<Scalar> &r, const ImageGrid<Scalar> &g, const ImageGrid<Scalar> &b) {
  require_same_shape(r, g, "to_luminance");
  require_same_shape(r, b, "to_luminance");
  ImageGrid<Scalar> y = Scalar(0.299) * r + Scalar(0.587) * g + Scalar(0.114) * b;
  return y.max(Scalar(0)).min(Scalar(1));
}

}  // namespace spmcsr

#endif  // SPMCSR_CORE_HPP
