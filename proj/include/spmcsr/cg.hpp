#ifndef SPMCSR_CG_HPP
#define SPMCSR_CG_HPP

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace spmcsr {

template <typename Scalar>
struct CgResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  std::vector<double> residual_history;  // ||b - A x_k|| / ||b||, k = 0..iterations
  int iterations = 0;
  bool converged = false;

  double final_relative_residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
};

/// Conjugate gradients for a symmetric positive definite operator given as a
/// callable y = apply(x). Starts from zero and stops once the relative
/// residual drops to tolerance or after max_iters.
template <typename Scalar, typename Apply>
CgResult<Scalar> conjugate_gradient(const Apply &apply, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> &b,
                                    int max_iters, double tolerance) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  CgResult<Scalar> res;
  res.x = Vec::Zero(b.size());
  const double b_norm = double(b.norm());
  if (b_norm == 0.0) {
    res.residual_history.push_back(0.0);
    res.converged = true;
    return res;
  }
  Vec r = b;
  Vec p = r;
  Scalar rr = r.squaredNorm();
  res.residual_history.push_back(1.0);
  for (int k = 0; k < max_iters; ++k) {
    const Vec ap = apply(p);
    const Scalar pap = p.dot(ap);
    if (!(pap > Scalar(0))) break;
    const Scalar step = rr / pap;
    res.x += step * p;
    r -= step * ap;
    const Scalar rr_new = r.squaredNorm();
    res.iterations = k + 1;
    res.residual_history.push_back(std::sqrt(double(rr_new)) / b_norm);
    if (res.residual_history.back() <= tolerance) {
      res.converged = true;
      break;
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  if (res.residual_history.back() <= tolerance) res.converged = true;
  return res;
}

}  // namespace spmcsr

#endif  // SPMCSR_CG_HPP
