#pragma once

#include <span>
#include <vector>

#include "tlsr/image.hpp"
#include "tlsr/nn/tensor.hpp"

namespace tlsr {

/// Packs equally sized HWC images into one NCHW tensor.
nn::Tensor to_tensor(std::span<const imaging::Image> images);
nn::Tensor to_tensor(const imaging::Image& image);

imaging::Image from_tensor(const nn::Tensor& t, int sample);
std::vector<imaging::Image> unbatch(const nn::Tensor& t);

}  // namespace tlsr
