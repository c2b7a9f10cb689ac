#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tlsr/nn/ops.hpp"
#include "tlsr/nn/tensor.hpp"
#include "tlsr/rng.hpp"

namespace tlsr::nn {

/// A differentiable stage with an explicit backward pass.
///
/// forward() caches whatever backward() needs; backward() consumes the
/// gradient w.r.t. the last forward output, accumulates parameter gradients
/// and returns the gradient w.r.t. the input.
class Module {
 public:
  virtual ~Module() = default;
  virtual Tensor forward(const Tensor& x) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual void collect_parameters(std::vector<Parameter*>& out) { (void)out; }

  std::vector<Parameter*> parameters();
  void zero_grad();
};

/// He-normal initialisation: N(0, 2 / fan_in).
Tensor kaiming_normal(Shape shape, int fan_in, Rng& rng);

/// Weights (c_out, c_in, k, k) or (out, in, 1, 1) and an optional bias.
struct LayerParams {
  Tensor weight;
  Tensor bias;  // empty when the layer has no bias
  bool has_bias() const { return bias.numel() > 0; }
};

struct ConvOptions {
  Padding padding = Padding::Zero;
  int groups = 1;
  bool bias = true;
  bool zero_init = false;
};

class Conv2d : public Module {
 public:
  Conv2d(const std::string& name, int in_channels, int out_channels, int kernel, Rng& rng, ConvOptions opts = {});

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override;

  LayerParams layer_params() const;
  void set_layer_params(const LayerParams& p);

  Parameter weight;
  Parameter bias;  // empty value when opts.bias is false
  ConvOptions options;

 private:
  Tensor input_;
};

class ReLU : public Module {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Tensor input_;
};

class Sigmoid : public Module {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Tensor output_;
};

class FullyConnected : public Module {
 public:
  FullyConnected(const std::string& name, int in_features, int out_features, Rng& rng, bool zero_init = false);

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override;

  Parameter weight;
  Parameter bias;

 private:
  Tensor input_;
};

class AvgPool2d : public Module {
 public:
  explicit AvgPool2d(int k) : k_(k) {}
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  int k_;
  Shape input_shape_;
};

class GlobalAvgPool : public Module {
 public:
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Shape input_shape_;
};

class PixelShuffle : public Module {
 public:
  explicit PixelShuffle(int s) : s_(s) {}
  Tensor forward(const Tensor& x) override { return pixel_shuffle(x, s_); }
  Tensor backward(const Tensor& grad_out) override { return pixel_shuffle_backward(grad_out, s_); }

 private:
  int s_;
};

class Sequential : public Module {
 public:
  Sequential() = default;
  Module& add(std::unique_ptr<Module> m);
  template <typename M, typename... Args>
  M& emplace(Args&&... args) {
    auto p = std::make_unique<M>(std::forward<Args>(args)...);
    M& ref = *p;
    add(std::move(p));
    return ref;
  }

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override;

  std::size_t size() const { return layers_.size(); }
  Module& operator[](std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Module>> layers_;
};

/// x + conv2(relu(conv1(x))); conv2 starts at zero so the block starts as identity.
class ResidualBlock : public Module {
 public:
  ResidualBlock(const std::string& name, int channels, Rng& rng, int kernel = 3, Padding padding = Padding::Zero);

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override;

  Conv2d conv1;
  Conv2d conv2;

 private:
  ReLU act_;
};

/// x + expand(relu(conv3x3(relu(reduce(x))))) with 1x1 reduce/expand.
class BottleneckBlock : public Module {
 public:
  BottleneckBlock(const std::string& name, int channels, int mid_channels, Rng& rng);

  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<Parameter*>& out) override;

  Conv2d reduce;
  Conv2d conv;
  Conv2d expand;

 private:
  ReLU act1_;
  ReLU act2_;
};

void add_inplace(Tensor& dst, const Tensor& src);

}  // namespace tlsr::nn
