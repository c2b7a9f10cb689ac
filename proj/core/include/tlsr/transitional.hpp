#pragma once

#include <span>
#include <string>
#include <vector>

#include "tlsr/nn/layers.hpp"

namespace tlsr::transitional {

using nn::LayerParams;
using nn::Tensor;

/// Two primary parameter sets of identical shape. theta0 serves the weakest
/// degradation (tau = 0), theta1 the strongest (tau = 1).
struct TransitionalParams {
  LayerParams theta0;
  LayerParams theta1;
};

/// (1 - tau) * theta0 + tau * theta1, over weights and biases.
LayerParams interpolate_params(const TransitionalParams& tp, double tau);

/// Convolution whose weights are rebuilt per sample from (theta0, theta1)
/// and that sample's tau.
///
/// The batch is viewed as one (1, B*c_in, H, W) image and convolved with the
/// B interpolated kernels stacked along c_out using groups = B.
class TransitionalConv2d : public nn::Module {
 public:
  TransitionalConv2d(const std::string& name, int in_channels, int out_channels, int kernel, Rng& rng,
                     bool zero_init = false, nn::Padding padding = nn::Padding::Zero);

  void set_taus(std::span<const double> taus);
  const std::vector<double>& taus() const { return taus_; }

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<nn::Parameter*>& out) override;

  TransitionalParams params() const;
  void set_params(const TransitionalParams& tp);
  LayerParams at(double tau) const { return interpolate_params(params(), tau); }

  /// dL/dtau_b accumulated by the last backward (one entry per sample).
  const std::vector<double>& tau_grad() const { return tau_grad_; }

  nn::Parameter weight0, bias0, weight1, bias1;
  nn::Padding padding;

 private:
  std::vector<double> taus_;
  std::vector<double> tau_grad_;
  Tensor input_;
  Tensor stacked_weight_;
};

/// Residual block with both convolutions transitional; same layout as
/// nn::ResidualBlock (conv, relu, conv, identity skip).
class TransitionalResidualBlock : public nn::Module {
 public:
  TransitionalResidualBlock(const std::string& name, int channels, Rng& rng, int kernel = 3);

  void set_taus(std::span<const double> taus);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<nn::Parameter*>& out) override;

  /// Copies the block evaluated at a single tau into a plain residual block.
  void export_to(nn::ResidualBlock& plain, double tau) const;
  std::vector<double> tau_grad() const;

  TransitionalConv2d conv1;
  TransitionalConv2d conv2;

 private:
  nn::ReLU act_;
};

/// The stack of m transitional blocks that follows the shared trunk.
class TransitionalStack : public nn::Module {
 public:
  TransitionalStack(const std::string& name, int blocks, int channels, Rng& rng);

  void set_taus(std::span<const double> taus);
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<nn::Parameter*>& out) override;
  std::vector<double> tau_grad() const;

  std::size_t size() const { return blocks_.size(); }
  TransitionalResidualBlock& block(std::size_t i) { return *blocks_[i]; }
  const TransitionalResidualBlock& block(std::size_t i) const { return *blocks_[i]; }

 private:
  std::vector<std::unique_ptr<TransitionalResidualBlock>> blocks_;
};

/// Runs the stack with one tau per sample (len(taus) must equal the batch).
Tensor transitional_forward(TransitionalStack& stack, const Tensor& x, std::span<const double> taus);

/// Residual of the four-term bilinear expansion of a single bias-free conv:
///   || F^t(t x0 + (1-t) x1) - [t^2 F0(x0) + t(1-t) F1(x0) + t(1-t) F0(x1) + (1-t)^2 F1(x1)] ||_inf
/// with the additive-literal weighting F^t = t theta0 + (1-t) theta1. With
/// `apply_relu` the layer becomes relu(conv(.)) and the identity no longer holds.
double bilinear_expansion_residual(const TransitionalParams& tp, const Tensor& x0, const Tensor& x1, double tau,
                                   bool apply_relu = false);

}  // namespace tlsr::transitional
