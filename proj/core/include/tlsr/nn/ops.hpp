#pragma once

#include <vector>

#include "tlsr/nn/tensor.hpp"

namespace tlsr::nn {

enum class Padding { Zero, Reflect };

/// Stride-1 "same" cross-correlation (no kernel flip).
///
/// weight: (c_out, c_in / groups, k, k) with k odd; bias: (c_out) or null.
/// Each (sample, group) pair is handled by the same sequence of banded
/// im2col GEMMs, so a groups = B convolution over a (1, B*c, H, W) view
/// computes bit for bit what B separate single-sample calls compute.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor* bias, Padding padding, int groups);

/// grad_x is overwritten; grad_weight and grad_bias are accumulated into.
void conv2d_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, Padding padding, int groups,
                     Tensor* grad_x, Tensor* grad_weight, Tensor* grad_bias);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);
Tensor sigmoid(const Tensor& x);
Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out);  // y = sigmoid(x)

/// x: (B, in, 1, 1) or any (B, C, H, W) flattened per sample; weight: (out, in, 1, 1).
Tensor fully_connected(const Tensor& x, const Tensor& weight, const Tensor* bias);
void fully_connected_backward(const Tensor& x, const Tensor& weight, const Tensor& grad_out, Tensor* grad_x,
                              Tensor* grad_weight, Tensor* grad_bias);

/// Non-overlapping k x k average pooling (stride k); H and W must divide by k.
Tensor avg_pool(const Tensor& x, int k);
Tensor avg_pool_backward(const Shape& input_shape, const Tensor& grad_out, int k);
Tensor global_avg_pool(const Tensor& x);
Tensor global_avg_pool_backward(const Shape& input_shape, const Tensor& grad_out);

/// (B, c*s*s, H, W) -> (B, c, s*H, s*W) with
/// out(b, c, s*h + dy, s*w + dx) = in(b, c*s*s + dy*s + dx, h, w).
Tensor pixel_shuffle(const Tensor& x, int s);
Tensor pixel_shuffle_backward(const Tensor& grad_out, int s);

struct Loss {
  double value = 0.0;
  Tensor grad;
};

/// Mean absolute error; the subgradient at exact ties is 0.
Loss l1_loss(const Tensor& pred, const Tensor& target);

}  // namespace tlsr::nn
