#ifndef SPMCSR_TESTS_SUPPORT_HPP
#define SPMCSR_TESTS_SUPPORT_HPP

#include "spmcsr/core.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace spmcsr::testing {

using Rng = std::mt19937_64;

inline Image random_image(Rng &rng, Eigen::Index w, Eigen::Index h, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = u(rng);
  return img;
}

inline Flow random_flow(Rng &rng, Eigen::Index w, Eigen::Index h, double mag) {
  return {random_image(rng, w, h, -mag, mag), random_image(rng, w, h, -mag, mag)};
}

inline Flow random_integer_flow(Rng &rng, Eigen::Index w, Eigen::Index h, int mag) {
  std::uniform_int_distribution<int> d(-mag, mag);
  Flow f = Flow::zeros(w, h);
  for (Eigen::Index i = 0; i < f.u.size(); ++i) {
    f.u.data()[i] = d(rng);
    f.v.data()[i] = d(rng);
  }
  return f;
}

inline Image ramp_x(Eigen::Index w, Eigen::Index h) {
  Image img(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) img(y, x) = double(x);
  return img;
}

inline double inner(const Image &a, const Image &b) { return (a * b).sum(); }

inline double max_abs_diff(const Image &a, const Image &b) { return (a - b).abs().maxCoeff(); }

inline bool bitwise_equal(const Image &a, const Image &b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && std::equal(a.data(), a.data() + a.size(), b.data());
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string &name) {
  const auto dir = std::filesystem::temp_directory_path() / ("spmcsr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace spmcsr::testing

#endif  // SPMCSR_TESTS_SUPPORT_HPP
