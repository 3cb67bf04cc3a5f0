#ifndef SPMCSR_TESTS_FLOW_FIXTURES_HPP
#define SPMCSR_TESTS_FLOW_FIXTURES_HPP

#include "spmcsr/evaldata.hpp"
#include "spmcsr/flow.hpp"

#include <cmath>

namespace spmcsr::testing {

struct ShiftedPair {
  Image ref;
  Image target;  // target(x, y) = ref(x + dx, y + dy)
};

// 64x64 crops of a smooth 96x96 texture, sampled bicubically at offset 16.
inline ShiftedPair shifted_pair(std::uint64_t seed, double dx, double dy, double texture_sigma = 2.0) {
  const Image base = random_texture(96, 96, seed, texture_sigma);
  ShiftedPair p{Image(64, 64), Image(64, 64)};
  const auto k = SamplingKernel::bicubic();
  for (Eigen::Index y = 0; y < 64; ++y)
    for (Eigen::Index x = 0; x < 64; ++x) {
      p.ref(y, x) = sample_at(base, double(x) + 16.0, double(y) + 16.0, k);
      p.target(y, x) = sample_at(base, double(x) + 16.0 + dx, double(y) + 16.0 + dy, k);
    }
  return p;
}

inline double mean_interior_epe(const Flow &f, double dx, double dy, Eigen::Index margin = 8) {
  double sum = 0.0;
  long n = 0;
  for (Eigen::Index y = margin; y < f.height() - margin; ++y)
    for (Eigen::Index x = margin; x < f.width() - margin; ++x) {
      sum += std::hypot(f.u(y, x) - dx, f.v(y, x) - dy);
      ++n;
    }
  return sum / double(n);
}

}  // namespace spmcsr::testing

#endif  // SPMCSR_TESTS_FLOW_FIXTURES_HPP
