#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "tlsr/rng.hpp"

namespace tlsr::imaging {

enum class ColorSpace { Rgb, Luminance };

/// H x W x C raster, interleaved (HWC), nominal range [0, 1].
///
/// Values are never clamped inside the pipeline; clamping and 8-bit
/// quantization happen only on export.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  ColorSpace color_space = ColorSpace::Rgb;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0);

  double& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  double at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

struct PatchBox {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  bool operator==(const PatchBox&) const = default;
};

/// Cubic-convolution resampling (a = -0.5). With antialias on and scale < 1
/// the kernel support is stretched by 1/scale. Output size is ceil(scale * in).
Image bicubic_resize(const Image& img, double scale, bool antialias = true);

/// BT.601 studio-swing luma on [0,1] RGB input.
Image rgb_to_luminance(const Image& img);

Image crop(const Image& img, const PatchBox& box);
/// Trims the bottom/right edge so both dimensions are multiples of `multiple`.
Image crop_to_multiple(const Image& img, int multiple);

std::vector<std::pair<Image, PatchBox>> random_crops(const Image& img, int count, int box_size, Rng& rng);

/// Dihedral group element k in [0, 8): bit 0 = horizontal flip, bit 1 =
/// vertical flip, bit 2 = transpose (applied last).
Image apply_dihedral(const Image& img, int k);
std::pair<Image, Image> augment(const Image& lr, const Image& hr, Rng& rng, int* drawn = nullptr);

using Rgb = std::array<double, 3>;
Rgb mean_rgb(std::span<const Image> dataset);
Image subtract_mean(const Image& img, const Rgb& mean);
Image add_mean(const Image& img, const Rgb& mean);

/// Round-trips through 8-bit: clamp to [0,1], round(v*255)/255.
Image quantize_8bit(const Image& img);

}  // namespace tlsr::imaging
