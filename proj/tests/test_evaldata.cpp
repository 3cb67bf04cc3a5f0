#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spmcsr/evaldata.hpp"
#include "spmcsr/resample.hpp"
#include "support.hpp"

#include <set>

using namespace spmcsr;
using namespace spmcsr::testing;

TEST_CASE("DegradationSpec validation") {
  DegradationSpec s;
  CHECK_NOTHROW(s.validate());
  s.alpha = 5;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.method = DegradationMethod::ExactModel;
  CHECK_NOTHROW(s.validate());
  s.noise_sigma = -0.1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("bicubic chain examples") {
  DegradationSpec s;
  for (int a : {2, 3, 4}) {
    s.alpha = a;
    const Image lr = degrade_bicubic(Image(Image::Constant(24, 36, 0.3)), s);
    CHECK(lr.rows() == 24 / a);
    CHECK(lr.cols() == 36 / a);
    CHECK((lr - 0.3).abs().maxCoeff() <= 1e-12);
  }
  s.alpha = 4;
  const Image big = Image::Zero(540, 960);
  const Image small = degrade_bicubic(big, s);
  CHECK(small.rows() == 135);
  CHECK(small.cols() == 240);
  CHECK_THROWS_AS(degrade_bicubic(Image(Image::Zero(10, 9)), s), DimensionError);
}

TEST_CASE("bicubic chain round trip on band-limited content") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Image hr = random_texture(96, 96, seed, 6.0);
    DegradationSpec s;
    s.alpha = 2;
    const Image lr = degrade_bicubic(hr, s);
    const Image back = resize(lr, 96, 96, SamplingKernel::bicubic(), GridAlignment::Center, false);
    CHECK(psnr(crop_border(back, 4), crop_border(hr, 4)) >= 40.0);
  }
}

TEST_CASE("exact model degradation and noise") {
  Rng rng(50);
  const Image hr = random_image(rng, 12, 12);
  DegradationSpec s;
  s.method = DegradationMethod::ExactModel;
  s.alpha = 3;
  CHECK(bitwise_equal(degrade(hr, s), decimate(hr, DecimationFactor(3))));
  s.blur = BlurSpec(1.0);
  CHECK(bitwise_equal(degrade(hr, s), decimate(gaussian_blur(hr, BlurSpec(1.0)), DecimationFactor(3))));

  s.noise_sigma = 0.05;
  s.seed = 9;
  const Image n1 = degrade(hr, s), n2 = degrade(hr, s);
  CHECK(bitwise_equal(n1, n2));
  s.seed = 10;
  CHECK_FALSE(bitwise_equal(n1, degrade(hr, s)));
}

TEST_CASE("noise statistics") {
  Image img = Image::Zero(200, 200);
  add_gaussian_noise(img, 0.1, 3);
  CHECK(std::abs(img.mean()) <= 0.002);
  CHECK(std::abs(std::sqrt(img.square().mean()) - 0.1) <= 0.002);
}

TEST_CASE("shift_image regimes") {
  Rng rng(51);
  const Image img = random_image(rng, 8, 6);
  const auto [a, ra] = shift_image(img, 2.0, -1.0);
  CHECK(ra == ShiftRegime::IntegerHr);
  CHECK(a(3, 1) == img(2, 3));
  CHECK(a(0, 1) == 0.0);
  CHECK(a(2, 7) == 0.0);
  const auto [b, rb] = shift_image(img, 0.5, 0.0);
  CHECK(rb == ShiftRegime::Interpolated);
  CHECK(b(2, 3) == doctest::Approx(sample_at(img, 3.5, 2.0, SamplingKernel::bicubic())));
}

TEST_CASE("synthetic sequences") {
  Rng rng(52);
  const Image hr = random_image(rng, 16, 16);

  const auto one = make_exact_sequence(SyntheticSequenceSpec<double>{hr, {{0.0, 0.0}}, 2, {}});
  CHECK(one.sequence.size() == 1);
  CHECK(bitwise_equal(one.sequence[0], decimate(hr, DecimationFactor(2))));

  const auto four = make_exact_sequence(SyntheticSequenceSpec<double>{hr, phase_covering_shifts(2), 2, {}});
  REQUIRE(four.sequence.size() == 4);
  CHECK(four.exact);
  // Every HR sample appears in exactly one frame.
  std::multiset<double> seen;
  for (const auto &f : four.sequence.frames())
    for (Eigen::Index i = 0; i < f.size(); ++i) seen.insert(f.data()[i]);
  for (Eigen::Index y = 0; y < 15; ++y)
    for (Eigen::Index x = 0; x < 15; ++x) CHECK(seen.count(hr(y, x)) >= 1);
  CHECK(four.flows_to_ref[3].u(0, 0) == 0.5);
  CHECK(four.flows_to_ref[3].v(0, 0) == 0.5);
  CHECK(four.flows_from_ref[1].u(0, 0) == -0.5);

  const auto frac = make_exact_sequence(SyntheticSequenceSpec<double>{hr, {{0.0, 0.0}, {0.3, 0.0}}, 2, {}});
  CHECK_FALSE(frac.exact);
  CHECK(frac.regimes[1] == ShiftRegime::Interpolated);

  CHECK_THROWS_AS(make_exact_sequence(SyntheticSequenceSpec<double>{hr, {}, 2, {}}), std::invalid_argument);
  CHECK_THROWS_AS(make_exact_sequence(SyntheticSequenceSpec<double>{hr, {{0.5, 0.0}}, 2, {}}), std::invalid_argument);
  CHECK_THROWS_AS(make_exact_sequence(SyntheticSequenceSpec<double>{hr, {{0.0, 0.0}, {9.0, 0.0}}, 2, {}}),
                  std::invalid_argument);
}

TEST_CASE("phase covering shifts") {
  const auto s = phase_covering_shifts(2);
  REQUIRE(s.size() == 4);
  CHECK(s[0] == std::pair{0.0, 0.0});
  CHECK(s[1] == std::pair{0.5, 0.0});
  CHECK(s[2] == std::pair{0.0, 0.5});
  CHECK(s[3] == std::pair{0.5, 0.5});
  CHECK(phase_covering_shifts(4).size() == 16);
}

TEST_CASE("random texture") {
  const Image t = random_texture(32, 24, 5);
  CHECK(t.rows() == 24);
  CHECK(t.minCoeff() == 0.0);
  CHECK(t.maxCoeff() == 1.0);
  CHECK(bitwise_equal(t, random_texture(32, 24, 5)));
  CHECK_FALSE(bitwise_equal(t, random_texture(32, 24, 6)));
}

TEST_CASE("psnr examples") {
  Rng rng(53);
  const Image a = random_image(rng, 8, 8);
  CHECK(psnr(a, a) == kPsnrCap);
  CHECK(psnr(Image(Image::Zero(4, 4)), Image(Image::Ones(4, 4))) == doctest::Approx(0.0));
  CHECK(psnr(Image(Image::Zero(4, 4)), Image(Image::Constant(4, 4, 0.5))) == doctest::Approx(6.0206).epsilon(1e-5));
  CHECK(psnr(Image(Image::Zero(4, 4)), Image(Image::Constant(4, 4, 127.5)), 255.0) ==
        doctest::Approx(6.0206).epsilon(1e-5));
  for (int t = 0; t < 20; ++t) {
    const Image x = random_image(rng, 8, 8), y = random_image(rng, 8, 8);
    CHECK(psnr(x, y) == psnr(y, x));
    CHECK(psnr(x, y) <= kPsnrCap);
  }
  CHECK_THROWS_AS(psnr(a, Image(Image::Zero(8, 7))), DimensionError);
}

TEST_CASE("ssim examples") {
  Rng rng(54);
  for (int t = 0; t < 10; ++t) {
    const Image a = random_image(rng, 16, 14);
    CHECK(ssim(a, a) == 1.0);
    const Image b = random_image(rng, 16, 14);
    CHECK(std::abs(ssim(a, b) - ssim(b, a)) <= 1e-12);
    CHECK(ssim(a, b) >= -1.0);
    CHECK(ssim(a, b) <= 1.0);
  }

  Image bin(16, 16);
  for (Eigen::Index y = 0; y < 16; ++y)
    for (Eigen::Index x = 0; x < 16; ++x) bin(y, x) = double((x / 2 + y / 3) % 2);
  CHECK(ssim(bin, Image(1.0 - bin)) < 1.0);

  const double ma = 0.3, mb = 0.45, c1 = 0.01 * 0.01;
  const double closed = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
  CHECK(ssim(Image(Image::Constant(12, 12, ma)), Image(Image::Constant(12, 12, mb))) ==
        doctest::Approx(closed).epsilon(1e-9));

  CHECK_THROWS_AS(ssim(Image(Image::Zero(10, 20)), Image(Image::Zero(10, 20))), DimensionError);
}

TEST_CASE("crop_border examples") {
  Rng rng(55);
  const Image a = random_image(rng, 10, 10);
  CHECK(bitwise_equal(crop_border(a, 0), a));
  const Image c = crop_border(a, 2);
  CHECK(c.rows() == 6);
  CHECK(c.cols() == 6);
  CHECK(c(0, 0) == a(2, 2));
  CHECK_THROWS_AS(crop_border(a, 5), DimensionError);
  CHECK_THROWS_AS(crop_border(a, -1), DimensionError);
}

TEST_CASE("resize keeps constants and aligns grids") {
  const Image c = Image::Constant(7, 9, 0.25);
  for (const auto k : {SamplingKernel::bilinear(), SamplingKernel::bicubic()})
    for (const auto g : {GridAlignment::Origin, GridAlignment::Center}) {
      CHECK((resize(c, 20, 13, k, g) - 0.25).abs().maxCoeff() <= 1e-12);
      CHECK((resize(c, 4, 3, k, g) - 0.25).abs().maxCoeff() <= 1e-12);
    }
  Rng rng(56);
  const Image x = random_image(rng, 6, 5);
  // Origin-aligned integer enlargement passes the input samples through.
  const Image up = upscale_bicubic(x, 3.0);
  CHECK(max_abs_diff(decimate(up, DecimationFactor(3)), x) <= 1e-15);
  CHECK_THROWS_AS(resize(x, 0, 3), DimensionError);
}
