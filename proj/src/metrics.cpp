#include "dsbrdf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dsbrdf {

namespace {

bool in_mask(std::span<const std::uint8_t> mask, std::size_t p) { return mask.empty() || mask[p] != 0; }

void check_mask(std::span<const std::uint8_t> mask, std::size_t pixels) {
  if (!mask.empty() && mask.size() != pixels) throw Error(ErrorCode::kShapeMismatch, "mask size does not match image");
}

std::vector<double> luminance(const LdrImage& img) {
  std::vector<double> out(img.pixels.size());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = (img.pixels[p][0] + img.pixels[p][1] + img.pixels[p][2]) / 3.0;
  return out;
}

std::array<double, kSsimWindow> gaussian_taps() {
  std::array<double, kSsimWindow> taps{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    taps[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += taps[i];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Separable "valid" filtering: output is (w - 10) x (h - 10).
std::vector<double> filter_valid(const std::vector<double>& in, int w, int h) {
  static const auto taps = gaussian_taps();
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int t = 0; t < kSsimWindow; ++t) s += taps[t] * in[static_cast<std::size_t>(y) * w + x + t];
      rows[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int t = 0; t < kSsimWindow; ++t) s += taps[t] * rows[static_cast<std::size_t>(y + t) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

double auto_exposure(const RadianceImage& img, std::span<const std::uint8_t> mask) {
  check_mask(mask, img.pixels.size());
  std::vector<double> lum;
  for (std::size_t p = 0; p < img.pixels.size(); ++p) {
    if (in_mask(mask, p)) lum.push_back((img.pixels[p][0] + img.pixels[p][1] + img.pixels[p][2]) / 3.0);
  }
  if (lum.empty()) return 1.0;
  const std::size_t rank = static_cast<std::size_t>(std::ceil(0.99 * lum.size())) - 1;
  std::nth_element(lum.begin(), lum.begin() + rank, lum.end());
  const double p99 = lum[rank];
  return p99 > 0.0 && std::isfinite(p99) ? 1.0 / p99 : 1.0;
}

LdrImage tone_map(const RadianceImage& img, std::optional<double> exposure, std::span<const std::uint8_t> mask) {
  const double e = exposure ? *exposure : auto_exposure(img, mask);
  if (!(e > 0.0) || !std::isfinite(e)) throw Error(ErrorCode::kInvalidArgument, "exposure must be positive");
  LdrImage out{img.width, img.height, std::vector<Rgb>(img.pixels.size())};
  for (std::size_t p = 0; p < img.pixels.size(); ++p) {
    for (int k = 0; k < 3; ++k) {
      const double c = std::max(e * img.pixels[p][k], 0.0);
      out.pixels[p][k] = std::clamp(255.0 * std::pow(c, 1.0 / 2.2), 0.0, 255.0);
    }
  }
  return out;
}

double l2_metric(const LdrImage& a, const LdrImage& b, std::span<const std::uint8_t> mask) {
  if (a.width != b.width || a.height != b.height) throw Error(ErrorCode::kShapeMismatch, "l2 metric: image sizes differ");
  check_mask(mask, a.pixels.size());
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < a.pixels.size(); ++p) {
    if (!in_mask(mask, p)) continue;
    double px = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double d = a.pixels[p][k] - b.pixels[p][k];
      px += d * d;
    }
    sum += px / 3.0;
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double ssim(const LdrImage& a, const LdrImage& b) {
  if (a.width != b.width || a.height != b.height) throw Error(ErrorCode::kShapeMismatch, "ssim: image sizes differ");
  if (a.width < kSsimWindow || a.height < kSsimWindow) {
    throw Error(ErrorCode::kTooSmall, "ssim needs at least 11x11 pixels, got " + std::to_string(a.width) + "x" +
                                          std::to_string(a.height));
  }
  constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
  constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);
  const int w = a.width;
  const int h = a.height;
  const std::vector<double> x = luminance(a);
  const std::vector<double> y = luminance(b);
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, w, h);
  const auto my = filter_valid(y, w, h);
  const auto exx = filter_valid(xx, w, h);
  const auto eyy = filter_valid(yy, w, h);
  const auto exy = filter_valid(xy, w, h);

  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = exx[i] - mx[i] * mx[i];
    const double vy = eyy[i] - my[i] * my[i];
    const double cxy = exy[i] - mx[i] * my[i];
    const double num = (2.0 * mx[i] * my[i] + kC1) * (2.0 * cxy + kC2);
    const double den = (mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2);
    total += num / den;
  }
  return total / static_cast<double>(mx.size());
}

}  // namespace dsbrdf
