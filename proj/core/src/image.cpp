#include "tlsr/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tlsr::imaging {

Image::Image(int h, int w, int c, double fill) : height(h), width(w), channels(c) {
  if (h < 0 || w < 0 || c < 0) throw std::invalid_argument("Image: negative dimension");
  data.assign(static_cast<std::size_t>(h) * w * c, fill);
  color_space = c == 1 ? ColorSpace::Luminance : ColorSpace::Rgb;
}

namespace {

double cubic(double x) {
  const double ax = std::abs(x);
  const double ax2 = ax * ax;
  const double ax3 = ax2 * ax;
  if (ax <= 1.0) return 1.5 * ax3 - 2.5 * ax2 + 1.0;
  if (ax <= 2.0) return -0.5 * ax3 + 2.5 * ax2 - 4.0 * ax + 2.0;
  return 0.0;
}

struct Contribution {
  std::vector<int> index;
  std::vector<double> weight;
};

// Mirrors the de-facto SR benchmark resampler: half-pixel centre alignment,
// symmetric boundary extension, weights renormalised per output sample.
std::vector<Contribution> contributions(int in_len, int out_len, double scale, bool antialias) {
  const bool stretch = antialias && scale < 1.0;
  const double kernel_width = stretch ? 4.0 / scale : 4.0;
  const int taps = static_cast<int>(std::ceil(kernel_width)) + 2;

  std::vector<Contribution> out(out_len);
  for (int i = 0; i < out_len; ++i) {
    const double u = (i + 1) / scale + 0.5 * (1.0 - 1.0 / scale);
    const int left = static_cast<int>(std::floor(u - kernel_width / 2.0));
    double total = 0.0;
    std::vector<double> w(taps);
    std::vector<int> idx(taps);
    for (int t = 0; t < taps; ++t) {
      const int j = left + t;  // 1-based source index
      const double d = u - j;
      w[t] = stretch ? scale * cubic(scale * d) : cubic(d);
      total += w[t];
      // Symmetric extension: 1..n, n..1, period 2n.
      const int period = 2 * in_len;
      int m = (j - 1) % period;
      if (m < 0) m += period;
      idx[t] = m < in_len ? m : period - 1 - m;
    }
    for (int t = 0; t < taps; ++t) {
      if (w[t] == 0.0) continue;
      out[i].index.push_back(idx[t]);
      out[i].weight.push_back(w[t] / total);
    }
  }
  return out;
}

}  // namespace

Image bicubic_resize(const Image& img, double scale, bool antialias) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("bicubic_resize: scale must be positive");
  const int out_h = static_cast<int>(std::ceil(img.height * scale - 1e-9));
  const int out_w = static_cast<int>(std::ceil(img.width * scale - 1e-9));
  if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("bicubic_resize: empty output");
  if (scale == 1.0) return img;

  const int c = img.channels;
  const auto rows = contributions(img.height, out_h, scale, antialias);
  Image tmp(out_h, img.width, c);
  tmp.color_space = img.color_space;
  for (int y = 0; y < out_h; ++y) {
    const auto& con = rows[y];
    for (int x = 0; x < img.width; ++x)
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t t = 0; t < con.index.size(); ++t) acc += con.weight[t] * img.at(con.index[t], x, ch);
        tmp.at(y, x, ch) = acc;
      }
  }

  const auto cols = contributions(img.width, out_w, scale, antialias);
  Image out(out_h, out_w, c);
  out.color_space = img.color_space;
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) {
      const auto& con = cols[x];
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t t = 0; t < con.index.size(); ++t) acc += con.weight[t] * tmp.at(y, con.index[t], ch);
        out.at(y, x, ch) = acc;
      }
    }
  return out;
}

Image rgb_to_luminance(const Image& img) {
  if (img.channels != 3) throw std::invalid_argument("rgb_to_luminance: expected 3 channels, got " + std::to_string(img.channels));
  Image out(img.height, img.width, 1);
  out.color_space = ColorSpace::Luminance;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      out.at(y, x, 0) =
          (65.481 * img.at(y, x, 0) + 128.553 * img.at(y, x, 1) + 24.966 * img.at(y, x, 2) + 16.0) / 255.0;
  return out;
}

Image crop(const Image& img, const PatchBox& box) {
  if (box.top < 0 || box.left < 0 || box.height <= 0 || box.width <= 0 || box.top + box.height > img.height ||
      box.left + box.width > img.width)
    throw std::invalid_argument("crop: box outside image");
  Image out(box.height, box.width, img.channels);
  out.color_space = img.color_space;
  const std::size_t row = static_cast<std::size_t>(box.width) * img.channels;
  for (int y = 0; y < box.height; ++y) {
    const double* src = &img.data[(static_cast<std::size_t>(box.top + y) * img.width + box.left) * img.channels];
    std::copy(src, src + row, &out.data[static_cast<std::size_t>(y) * row]);
  }
  return out;
}

Image crop_to_multiple(const Image& img, int multiple) {
  if (multiple < 1) throw std::invalid_argument("crop_to_multiple: multiple must be >= 1");
  const int h = img.height - img.height % multiple;
  const int w = img.width - img.width % multiple;
  if (h == 0 || w == 0) throw std::invalid_argument("crop_to_multiple: image smaller than multiple");
  if (h == img.height && w == img.width) return img;
  return crop(img, {0, 0, h, w});
}

std::vector<std::pair<Image, PatchBox>> random_crops(const Image& img, int count, int box_size, Rng& rng) {
  if (count < 1) throw std::invalid_argument("random_crops: count must be >= 1");
  if (box_size < 1 || img.height < box_size || img.width < box_size)
    throw std::invalid_argument("random_crops: image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                                " smaller than box " + std::to_string(box_size));
  std::vector<std::pair<Image, PatchBox>> out;
  out.reserve(count);
  for (int t = 0; t < count; ++t) {
    PatchBox box{rng.uniform_int(0, img.height - box_size), rng.uniform_int(0, img.width - box_size), box_size,
                 box_size};
    out.emplace_back(crop(img, box), box);
  }
  return out;
}

Image apply_dihedral(const Image& img, int k) {
  if (k < 0 || k >= 8) throw std::invalid_argument("apply_dihedral: k must be in [0, 8)");
  const bool hflip = k & 1;
  const bool vflip = k & 2;
  const bool transpose = k & 4;
  const int oh = transpose ? img.width : img.height;
  const int ow = transpose ? img.height : img.width;
  Image out(oh, ow, img.channels);
  out.color_space = img.color_space;
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      int sy = transpose ? x : y;
      int sx = transpose ? y : x;
      if (hflip) sx = img.width - 1 - sx;
      if (vflip) sy = img.height - 1 - sy;
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(sy, sx, c);
    }
  return out;
}

std::pair<Image, Image> augment(const Image& lr, const Image& hr, Rng& rng, int* drawn) {
  if (lr.height == 0 || lr.width == 0 || hr.height % lr.height != 0 || hr.width % lr.width != 0 ||
      hr.height / lr.height != hr.width / lr.width || lr.channels != hr.channels)
    throw std::invalid_argument("augment: HR is not an integer upscale of LR");
  const int k = rng.uniform_int(0, 7);
  if (drawn) *drawn = k;
  return {apply_dihedral(lr, k), apply_dihedral(hr, k)};
}

Rgb mean_rgb(std::span<const Image> dataset) {
  if (dataset.empty()) throw std::invalid_argument("mean_rgb: empty dataset");
  Rgb sum{0.0, 0.0, 0.0};
  double count = 0.0;
  for (const auto& img : dataset) {
    if (img.channels != 3) throw std::invalid_argument("mean_rgb: expected RGB images");
    Rgb local{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < img.data.size(); i += 3)
      for (int c = 0; c < 3; ++c) local[c] += img.data[i + c];
    for (int c = 0; c < 3; ++c) sum[c] += local[c];
    count += static_cast<double>(img.height) * img.width;
  }
  for (auto& v : sum) v /= count;
  return sum;
}

namespace {
Image shift_mean(const Image& img, const Rgb& mean, double sign) {
  if (img.channels != 3) throw std::invalid_argument("mean shift: expected RGB image");
  Image out = img;
  for (std::size_t i = 0; i < out.data.size(); i += 3)
    for (int c = 0; c < 3; ++c) out.data[i + c] += sign * mean[c];
  return out;
}
}  // namespace

Image subtract_mean(const Image& img, const Rgb& mean) { return shift_mean(img, mean, -1.0); }
Image add_mean(const Image& img, const Rgb& mean) { return shift_mean(img, mean, 1.0); }

Image quantize_8bit(const Image& img) {
  Image out = img;
  for (auto& v : out.data) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  return out;
}

}  // namespace tlsr::imaging
