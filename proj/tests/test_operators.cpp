#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spmcsr/operators.hpp"
#include "support.hpp"

using namespace spmcsr;
using namespace spmcsr::testing;

TEST_CASE("decimate examples") {
  Image rows(2, 4);
  rows << 1, 2, 3, 4, 5, 6, 7, 8;
  const Image kept = decimate(rows, DecimationFactor(2));
  REQUIRE(kept.rows() == 1);
  REQUIRE(kept.cols() == 2);
  CHECK(kept(0, 0) == 1);
  CHECK(kept(0, 1) == 3);

  Image ramp(4, 4);
  for (Eigen::Index y = 0; y < 4; ++y)
    for (Eigen::Index x = 0; x < 4; ++x) ramp(y, x) = double(x + 4 * y);
  Image expect(2, 2);
  expect << 0, 2, 8, 10;
  CHECK(bitwise_equal(decimate(ramp, DecimationFactor(2)), expect));
  CHECK(bitwise_equal(decimate(ramp, DecimationFactor(1)), ramp));
  CHECK_THROWS_AS(decimate(ramp, DecimationFactor(3)), DimensionError);
  CHECK_THROWS_AS(DecimationFactor(0), std::invalid_argument);
}

TEST_CASE("zero_upsample examples") {
  Image lr(1, 2);
  lr << 7, 9;
  const Image up = zero_upsample(lr, DecimationFactor(2));
  REQUIRE(up.rows() == 2);
  REQUIRE(up.cols() == 4);
  Image expect = Image::Zero(2, 4);
  expect(0, 0) = 7;
  expect(0, 2) = 9;
  CHECK(bitwise_equal(up, expect));
  CHECK(bitwise_equal(zero_upsample(lr, DecimationFactor(1)), lr));
}

TEST_CASE("S S^T is the identity and S^T S is the phase-0 mask") {
  Rng rng(10);
  for (int a : {1, 2, 3, 4}) {
    const DecimationFactor f(a);
    const Image lr = random_image(rng, 3, 2);
    CHECK(bitwise_equal(decimate(zero_upsample(lr, f), f), lr));
    const Image hr = random_image(rng, 3 * a, 2 * a);
    const Image masked = zero_upsample(decimate(hr, f), f);
    for (Eigen::Index y = 0; y < hr.rows(); ++y)
      for (Eigen::Index x = 0; x < hr.cols(); ++x)
        CHECK(masked(y, x) == ((y % a == 0 && x % a == 0) ? hr(y, x) : 0.0));
  }
}

TEST_CASE("backward_warp examples") {
  Rng rng(11);
  const Image img = random_image(rng, 6, 5);
  CHECK(bitwise_equal(backward_warp(img, Flow::zeros(6, 5)), img));

  const Image ramp = ramp_x(6, 5);
  const Image one = backward_warp(ramp, Flow::constant(6, 5, 1.0, 0.0));
  for (Eigen::Index y = 0; y < 5; ++y) {
    for (Eigen::Index x = 0; x < 5; ++x) CHECK(one(y, x) == double(x + 1));
    CHECK(one(y, 5) == 0.0);
  }
  const Image half = backward_warp(ramp, Flow::constant(6, 5, 0.5, 0.0));
  for (Eigen::Index y = 0; y < 5; ++y)
    for (Eigen::Index x = 0; x < 5; ++x) CHECK(half(y, x) == doctest::Approx(double(x) + 0.5).epsilon(1e-15));

  CHECK_THROWS_AS(backward_warp(img, Flow::zeros(5, 5)), DimensionError);
}

TEST_CASE("forward_warp examples") {
  Rng rng(12);
  const Image img = random_image(rng, 6, 5);
  CHECK(bitwise_equal(forward_warp(img, Flow::zeros(6, 5)), img));
  CHECK_THROWS_AS(forward_warp(img, Flow::zeros(6, 6)), DimensionError);
}

TEST_CASE("forward_warp preserves mass when every splat is interior") {
  Rng rng(13);
  for (int t = 0; t < 50; ++t) {
    const Image x = random_image(rng, 10, 10);
    Flow f = random_flow(rng, 10, 10, 0.45);
    // Keep the outer ring still so every target stays in bounds.
    for (Eigen::Index i = 0; i < 10; ++i) {
      f.u(0, i) = f.v(0, i) = f.u(9, i) = f.v(9, i) = 0.0;
      f.u(i, 0) = f.v(i, 0) = f.u(i, 9) = f.v(i, 9) = 0.0;
    }
    CHECK(std::abs(forward_warp(x, f).sum() - x.sum()) <= 1e-10);
    // The bicubic footprint is two pixels wide; still the second ring too.
    for (Eigen::Index i = 0; i < 10; ++i) {
      f.u(1, i) = f.v(1, i) = f.u(8, i) = f.v(8, i) = 0.0;
      f.u(i, 1) = f.v(i, 1) = f.u(i, 8) = f.v(i, 8) = 0.0;
    }
    CHECK(std::abs(forward_warp(x, f, SamplingKernel::bicubic()).sum() - x.sum()) <= 1e-10);
  }
}

TEST_CASE("adjoint identities on random 8x8 instances") {
  Rng rng(14);
  for (int t = 0; t < 100; ++t) {
    const Image x = random_image(rng, 8, 8), y = random_image(rng, 8, 8);
    const Flow f = random_flow(rng, 8, 8, 2.5);
    for (const auto k : {SamplingKernel::bilinear(), SamplingKernel::bicubic()}) {
      CHECK(std::abs(inner(backward_warp(x, f, k), y) - inner(x, forward_warp(y, f, k))) <= 1e-10);
    }
    const BlurSpec b(0.5 + 0.015 * t);
    CHECK(std::abs(inner(gaussian_blur(x, b), y) - inner(x, gaussian_blur(y, b))) <= 1e-10);
    const DecimationFactor s(t % 2 == 0 ? 2 : 4);
    const Image ly = random_image(rng, 8 / s.alpha, 8 / s.alpha);
    CHECK(std::abs(inner(decimate(x, s), ly) - inner(x, zero_upsample(ly, s))) <= 1e-10);
  }
}

TEST_CASE("materialized transposes match") {
  Rng rng(15);
  OperatorSpec<double> s;
  s.kind = OperatorKind::Decimate;
  s.factor = DecimationFactor(2);
  OperatorSpec<double> st = s;
  st.kind = OperatorKind::ZeroUpsample;
  const auto ms = materialize_operator(s, 6, 4);
  const auto mst = materialize_operator(st, 3, 2);
  CHECK(ms.rows() == 6);
  CHECK(ms.cols() == 24);
  CHECK((ms.transpose() - mst).cwiseAbs().maxCoeff() == 0.0);

  for (int t = 0; t < 20; ++t) {
    for (const auto k : {SamplingKernel::bilinear(), SamplingKernel::bicubic()}) {
      OperatorSpec<double> w;
      w.kind = OperatorKind::BackwardWarp;
      w.flow = random_flow(rng, 7, 5, 2.0);
      w.kernel = k;
      OperatorSpec<double> wt = w;
      wt.kind = OperatorKind::ForwardWarp;
      const auto mw = materialize_operator(w, 7, 5), mwt = materialize_operator(wt, 7, 5);
      CHECK((mw.transpose() - mwt).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
  OperatorSpec<double> k;
  k.kind = OperatorKind::Blur;
  k.blur = BlurSpec(1.2);
  const auto mk = materialize_operator(k, 9, 9);
  CHECK((mk - mk.transpose()).cwiseAbs().maxCoeff() <= 1e-15);

  CHECK_THROWS_AS(materialize_operator(k, 17, 4), DimensionError);
  st.factor = DecimationFactor(4);
  CHECK_THROWS_AS(materialize_operator(st, 8, 2), DimensionError);
}

TEST_CASE("integer interior flow permutes pixel values") {
  Rng rng(16);
  for (int t = 0; t < 20; ++t) {
    const Image x = random_image(rng, 8, 8);
    // A cyclic shift restricted to the interior 6x6 block, so no pixel leaves.
    Flow f = Flow::zeros(8, 8);
    const int dx = int(t % 3) - 1, dy = int((t / 3) % 3) - 1;
    for (Eigen::Index y = 1; y < 7; ++y)
      for (Eigen::Index xx = 1; xx < 7; ++xx) {
        f.u(y, xx) = double((xx - 1 + dx + 6) % 6 + 1 - xx);
        f.v(y, xx) = double((y - 1 + dy + 6) % 6 + 1 - y);
      }
    const Image out = forward_warp(x, f);
    std::vector<double> a(x.data(), x.data() + x.size()), b(out.data(), out.data() + out.size());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
}

TEST_CASE("W^T S^T S W is diagonal for integer interior flow") {
  Rng rng(17);
  for (int t = 0; t < 10; ++t) {
    Flow f = random_integer_flow(rng, 8, 8, 1);
    for (Eigen::Index i = 0; i < 8; ++i) {
      f.u(0, i) = f.v(0, i) = f.u(7, i) = f.v(7, i) = 0.0;
      f.u(i, 0) = f.v(i, 0) = f.u(i, 7) = f.v(i, 7) = 0.0;
    }
    const DecimationFactor s(2);
    const auto m = materialize<double>(
        [&](const Image &x) { return forward_warp(zero_upsample(decimate(backward_warp(x, f), s), s), f); }, 8, 8);
    const Eigen::MatrixXd off = m - Eigen::MatrixXd(m.diagonal().asDiagonal());
    CHECK(off.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("gaussian blur examples") {
  const BlurSpec b(1.0);
  CHECK(b.radius == 3);
  const auto taps = b.taps();
  CHECK(taps.sum() == doctest::Approx(1.0).epsilon(1e-15));
  for (int k = 0; k <= 3; ++k) CHECK(taps(3 + k) == taps(3 - k));
  CHECK_THROWS_AS(BlurSpec(0.0), std::invalid_argument);
  CHECK_THROWS_AS(BlurSpec(1.0, -1), std::invalid_argument);

  const Image c = Image::Constant(12, 12, 0.4);
  const Image bc = gaussian_blur(c, b);
  CHECK((bc.block(3, 3, 6, 6) - 0.4).abs().maxCoeff() <= 1e-15);

  Image delta = Image::Zero(9, 9);
  delta(4, 4) = 1.0;
  const Image bd = gaussian_blur(delta, b);
  for (int y = -3; y <= 3; ++y)
    for (int x = -3; x <= 3; ++x) CHECK(bd(4 + y, 4 + x) == doctest::Approx(taps(3 + y) * taps(3 + x)).epsilon(1e-14));
}

TEST_CASE("splat is deterministic") {
  Rng rng(18);
  const Image x = random_image(rng, 9, 9);
  const Flow f = random_flow(rng, 9, 9, 3.0);
  const Image a = forward_warp(x, f, SamplingKernel::bicubic());
  const Image b = forward_warp(x, f, SamplingKernel::bicubic());
  CHECK(bitwise_equal(a, b));
}
