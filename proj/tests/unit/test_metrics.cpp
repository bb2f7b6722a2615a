#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dsbrdf/error.hpp"
#include "dsbrdf/metrics.hpp"
#include "oracles.hpp"

namespace dsbrdf {
namespace {

LdrImage constant_ldr(int w, int h, double v) { return LdrImage{w, h, std::vector<Rgb>(w * h, Rgb{v, v, v})}; }

LdrImage random_ldr(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 255.0);
  LdrImage img{w, h, std::vector<Rgb>(w * h)};
  for (Rgb& p : img.pixels) {
    for (double& c : p) c = u(rng);
  }
  return img;
}

RadianceImage one_pixel(double c) {
  RadianceImage img(1, 1);
  img.pixels[0] = {c, c, c};
  return img;
}

TEST(ToneMap, Examples) {
  EXPECT_EQ(tone_map(one_pixel(0.0), 1.0).pixels[0][0], 0.0);
  EXPECT_EQ(tone_map(one_pixel(0.25), 4.0).pixels[0][1], 255.0);
  EXPECT_NEAR(tone_map(one_pixel(0.5), 1.0).pixels[0][2], 255.0 * std::pow(0.5, 1.0 / 2.2), 1e-12);
  EXPECT_NEAR(tone_map(one_pixel(0.5), 1.0).pixels[0][2], 186.0837, 1e-4);
  EXPECT_EQ(tone_map(one_pixel(7.0), 1.0).pixels[0][0], 255.0);
}

TEST(ToneMap, Monotone) {
  RadianceImage img(200, 1);
  for (int x = 0; x < 200; ++x) img.pixels[x] = {x * 0.01, x * 0.007, x * 0.02};
  const LdrImage t = tone_map(img, 1.3);
  for (int x = 1; x < 200; ++x) {
    for (int k = 0; k < 3; ++k) EXPECT_LE(t.pixels[x - 1][k], t.pixels[x][k]);
  }
}

TEST(ToneMap, AutoExposure) {
  EXPECT_EQ(auto_exposure(RadianceImage(4, 4)), 1.0);
  RadianceImage img(10, 10);
  for (int i = 0; i < 100; ++i) img.pixels[i] = {i + 1.0, i + 1.0, i + 1.0};
  const double e = auto_exposure(img);
  EXPECT_GT(e, 1.0 / 100.0);
  EXPECT_LE(e, 1.0 / 98.0);
  EXPECT_THROW(tone_map(img, -1.0), Error);
}

TEST(L2, Examples) {
  const LdrImage a = constant_ldr(3, 2, 10.0);
  EXPECT_EQ(l2_metric(a, a), 0.0);
  EXPECT_EQ(l2_metric(constant_ldr(3, 2, 0.0), constant_ldr(3, 2, 255.0)), 65025.0);
  LdrImage b = a;
  b.pixels[4][0] += 3.0;
  std::vector<std::uint8_t> mask(6, 0);
  mask[4] = 1;
  EXPECT_EQ(l2_metric(a, b, mask), 3.0);
}

TEST(L2, SymmetricAndMasked) {
  std::mt19937_64 rng(1);
  const LdrImage a = random_ldr(5, 5, rng), b = random_ldr(5, 5, rng);
  EXPECT_EQ(l2_metric(a, b), l2_metric(b, a));
  std::vector<std::uint8_t> none(25, 0);
  none[0] = 1;
  LdrImage c = a;
  for (std::size_t p = 1; p < c.pixels.size(); ++p) c.pixels[p] = b.pixels[p];
  EXPECT_EQ(l2_metric(a, c, none), 0.0);
  EXPECT_THROW(l2_metric(a, random_ldr(4, 5, rng)), Error);
}

TEST(Ssim, IdenticalIsExactlyOne) {
  std::mt19937_64 rng(2);
  const LdrImage a = random_ldr(20, 17, rng);
  EXPECT_EQ(ssim(a, a), 1.0);
  const LdrImage flat = constant_ldr(12, 12, 0.0);
  EXPECT_EQ(ssim(flat, flat), 1.0);
}

TEST(Ssim, ShiftedConstantIsBounded) {
  const double v = ssim(constant_ldr(16, 16, 40.0), constant_ldr(16, 16, 255.0));
  EXPECT_LT(v, 1.0);
  EXPECT_GE(v, -1.0);
}

TEST(Ssim, MatchesDirectOracle) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const LdrImage a = random_ldr(16, 16, rng);
    LdrImage b = random_ldr(16, 16, rng);
    // Correlate b with a so the structure term is not near zero.
    for (std::size_t p = 0; p < b.pixels.size(); ++p) {
      for (int k = 0; k < 3; ++k) b.pixels[p][k] = 0.7 * a.pixels[p][k] + 0.3 * b.pixels[p][k];
    }
    EXPECT_NEAR(ssim(a, b), oracle::ssim(a, b), 1e-9);
  }
}

TEST(Ssim, Symmetric) {
  std::mt19937_64 rng(4);
  const LdrImage a = random_ldr(23, 19, rng), b = random_ldr(23, 19, rng);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
}

TEST(Ssim, Errors) {
  try {
    ssim(constant_ldr(10, 12, 1.0), constant_ldr(10, 12, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooSmall);
  }
  try {
    ssim(constant_ldr(12, 12, 1.0), constant_ldr(13, 12, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

}  // namespace
}  // namespace dsbrdf
