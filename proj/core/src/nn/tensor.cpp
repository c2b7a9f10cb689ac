#include "tlsr/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tlsr::nn {

std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," + std::to_string(s.h) + "," + std::to_string(s.w) + ")";
}

Tensor Tensor::reshaped(Shape s) const {
  if (s.numel() != numel()) throw std::invalid_argument("reshape: " + to_string(shape) + " -> " + to_string(s));
  Tensor t;
  t.shape = s;
  t.data = data;
  return t;
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!(a.shape == b.shape)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace tlsr::nn
