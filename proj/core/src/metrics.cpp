#include "tlsr/metrics.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace tlsr::imaging {

Image crop_border(const Image& img, int border) {
  if (border < 0) throw std::invalid_argument("crop_border: negative border");
  if (border == 0) return img;
  if (2 * border >= img.height || 2 * border >= img.width) throw std::invalid_argument("crop_border: border too large");
  return crop(img, {border, border, img.height - 2 * border, img.width - 2 * border});
}

double psnr(const Image& a, const Image& b, int border) {
  if (!a.same_shape(b)) throw std::invalid_argument("psnr: shape mismatch");
  const Image ca = crop_border(a, border);
  const Image cb = crop_border(b, border);
  // Extended accumulator keeps uniform-error cases on their closed form.
  long double sse = 0.0L;
  for (std::size_t i = 0; i < ca.data.size(); ++i) {
    const long double d = static_cast<long double>(ca.data[i]) - cb.data[i];
    sse += d * d;
  }
  const double mse = static_cast<double>(sse / static_cast<long double>(ca.data.size()));
  if (mse < 1e-10) return kPsnrCap;
  return -10.0 * std::log10(mse);
}

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;

std::array<double, kWin> gaussian_window_1d() {
  std::array<double, kWin> w{};
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    w[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += w[i];
  }
  for (auto& v : w) v /= sum;
  return w;
}

// Valid-mode separable filtering of a single-channel H x W buffer.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w, const std::array<double, kWin>& k) {
  const int oh = h - kWin + 1;
  const int ow = w - kWin + 1;
  std::vector<double> tmp(static_cast<std::size_t>(oh) * w);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = 0; t < kWin; ++t) acc += k[t] * src[static_cast<std::size_t>(y + t) * w + x];
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int t = 0; t < kWin; ++t) acc += k[t] * tmp[static_cast<std::size_t>(y) * w + x + t];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("ssim: shape mismatch");
  if (a.channels != 1) throw std::invalid_argument("ssim: expected single-channel images");
  if (a.height < kWin || a.width < kWin) throw std::invalid_argument("ssim: image smaller than 11x11 window");

  constexpr double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  constexpr double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  const auto k = gaussian_window_1d();
  const int h = a.height;
  const int w = a.width;

  std::vector<double> aa(a.data.size()), bb(a.data.size()), ab(a.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    aa[i] = a.data[i] * a.data[i];
    bb[i] = b.data[i] * b.data[i];
    ab[i] = a.data[i] * b.data[i];
  }
  const auto mu_a = filter_valid(a.data, h, w, k);
  const auto mu_b = filter_valid(b.data, h, w, k);
  const auto e_aa = filter_valid(aa, h, w, k);
  const auto e_bb = filter_valid(bb, h, w, k);
  const auto e_ab = filter_valid(ab, h, w, k);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double va = e_aa[i] - ma * ma;
    const double vb = e_bb[i] - mb * mb;
    const double cov = e_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

QualityScore luminance_quality(const Image& restored, const Image& reference, int border) {
  const Image ya = restored.channels == 3 ? rgb_to_luminance(restored) : restored;
  const Image yb = reference.channels == 3 ? rgb_to_luminance(reference) : reference;
  const Image ca = crop_border(ya, border);
  const Image cb = crop_border(yb, border);
  return {psnr(ca, cb, 0), ssim(ca, cb)};
}

}  // namespace tlsr::imaging
