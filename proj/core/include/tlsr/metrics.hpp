#pragma once

#include "tlsr/image.hpp"

namespace tlsr::imaging {

inline constexpr double kPsnrCap = 100.0;

Image crop_border(const Image& img, int border);

/// PSNR in dB with peak 1.0 over all channels after removing `border`
/// pixels from every side. Returns kPsnrCap when MSE < 1e-10.
double psnr(const Image& a, const Image& b, int border = 0);

/// Mean SSIM of single-channel images: 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range 1, valid-region map.
double ssim(const Image& a, const Image& b);

/// Evaluation convention: RGB -> luminance, crop `border`, then PSNR/SSIM.
struct QualityScore {
  double psnr_db = 0.0;
  double ssim = 0.0;
};
QualityScore luminance_quality(const Image& restored, const Image& reference, int border);

}  // namespace tlsr::imaging
