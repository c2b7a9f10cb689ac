#include "tlsr/batch.hpp"

#include <stdexcept>

namespace tlsr {

nn::Tensor to_tensor(std::span<const imaging::Image> images) {
  if (images.empty()) throw std::invalid_argument("to_tensor: empty batch");
  const auto& first = images.front();
  nn::Tensor t(nn::Shape{static_cast<int>(images.size()), first.channels, first.height, first.width});
  for (std::size_t b = 0; b < images.size(); ++b) {
    const auto& img = images[b];
    if (!img.same_shape(first)) throw std::invalid_argument("to_tensor: images differ in shape");
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        for (int c = 0; c < img.channels; ++c) t.at(static_cast<int>(b), c, y, x) = img.at(y, x, c);
  }
  return t;
}

nn::Tensor to_tensor(const imaging::Image& image) { return to_tensor(std::span<const imaging::Image>(&image, 1)); }

imaging::Image from_tensor(const nn::Tensor& t, int sample) {
  if (sample < 0 || sample >= t.shape.n) throw std::out_of_range("from_tensor: sample index");
  imaging::Image img(t.shape.h, t.shape.w, t.shape.c);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) img.at(y, x, c) = t.at(sample, c, y, x);
  return img;
}

std::vector<imaging::Image> unbatch(const nn::Tensor& t) {
  std::vector<imaging::Image> out;
  out.reserve(t.shape.n);
  for (int b = 0; b < t.shape.n; ++b) out.push_back(from_tensor(t, b));
  return out;
}

}  // namespace tlsr
