#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dsbrdf/core.hpp"

namespace dsbrdf {

/// Display-referred image, every channel in [0, 255]. Values are kept
/// unquantized; quantization happens only when writing previews.
struct LdrImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;
};

/// 1 / (99th percentile of foreground luminance), luminance = channel mean.
/// Falls back to 1 for all-black input. An empty mask means every pixel.
double auto_exposure(const RadianceImage& img, std::span<const std::uint8_t> mask = {});

/// clamp(255 * (exposure * c)^(1/2.2), 0, 255) per channel; nullopt exposure means auto.
LdrImage tone_map(const RadianceImage& img, std::optional<double> exposure = std::nullopt,
                  std::span<const std::uint8_t> mask = {});

/// Mean over foreground pixels of the mean squared channel difference.
double l2_metric(const LdrImage& a, const LdrImage& b, std::span<const std::uint8_t> mask = {});

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Mean SSIM over all fully-contained 11x11 Gaussian (sigma 1.5) windows of the
/// channel-mean luminance, C1 = (0.01 * 255)^2, C2 = (0.03 * 255)^2.
/// Throws kShapeMismatch, or kTooSmall below 11x11.
double ssim(const LdrImage& a, const LdrImage& b);

}  // namespace dsbrdf
