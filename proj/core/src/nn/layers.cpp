#include "tlsr/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace tlsr::nn {

std::vector<Parameter*> Module::parameters() {
  std::vector<Parameter*> out;
  collect_parameters(out);
  return out;
}

void Module::zero_grad() {
  for (Parameter* p : parameters()) p->grad.fill(0.0);
}

Tensor kaiming_normal(Shape shape, int fan_in, Rng& rng) {
  Tensor t(shape);
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : t.data) v = rng.normal(0.0, sd);
  return t;
}

void add_inplace(Tensor& dst, const Tensor& src) {
  if (!(dst.shape == src.shape)) throw std::invalid_argument("add_inplace: shape mismatch " + to_string(dst.shape) + " vs " + to_string(src.shape));
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

Conv2d::Conv2d(const std::string& name, int in_channels, int out_channels, int kernel, Rng& rng, ConvOptions opts)
    : options(opts) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1 || kernel % 2 == 0)
    throw std::invalid_argument("Conv2d " + name + ": invalid geometry");
  if (in_channels % opts.groups != 0 || out_channels % opts.groups != 0)
    throw std::invalid_argument("Conv2d " + name + ": channels not divisible by groups");
  const Shape ws{out_channels, in_channels / opts.groups, kernel, kernel};
  const int fan_in = ws.c * kernel * kernel;
  weight = Parameter(name + ".weight", opts.zero_init ? Tensor(ws) : kaiming_normal(ws, fan_in, rng));
  if (opts.bias) bias = Parameter(name + ".bias", Tensor(Shape{out_channels, 1, 1, 1}));
}

Tensor Conv2d::forward(const Tensor& x) {
  input_ = x;
  return conv2d(x, weight.value, options.bias ? &bias.value : nullptr, options.padding, options.groups);
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  Tensor dx;
  conv2d_backward(input_, weight.value, grad_out, options.padding, options.groups, &dx, &weight.grad,
                  options.bias ? &bias.grad : nullptr);
  return dx;
}

LayerParams Conv2d::layer_params() const {
  return {weight.value, options.bias ? bias.value : Tensor()};
}

void Conv2d::set_layer_params(const LayerParams& p) {
  if (!(p.weight.shape == weight.value.shape)) throw std::invalid_argument("Conv2d: weight shape mismatch for " + weight.name);
  if (p.has_bias() != options.bias) throw std::invalid_argument("Conv2d: bias presence mismatch for " + weight.name);
  weight.value = p.weight;
  if (options.bias) {
    if (!(p.bias.shape == bias.value.shape)) throw std::invalid_argument("Conv2d: bias shape mismatch");
    bias.value = p.bias;
  }
}

void Conv2d::collect_parameters(std::vector<Parameter*>& out) {
  out.push_back(&weight);
  if (options.bias) out.push_back(&bias);
}

Tensor ReLU::forward(const Tensor& x) {
  input_ = x;
  return relu(x);
}

Tensor ReLU::backward(const Tensor& grad_out) { return relu_backward(input_, grad_out); }

Tensor Sigmoid::forward(const Tensor& x) {
  output_ = sigmoid(x);
  return output_;
}

Tensor Sigmoid::backward(const Tensor& grad_out) { return sigmoid_backward(output_, grad_out); }

FullyConnected::FullyConnected(const std::string& name, int in_features, int out_features, Rng& rng, bool zero_init) {
  const Shape ws{out_features, in_features, 1, 1};
  weight = Parameter(name + ".weight", zero_init ? Tensor(ws) : kaiming_normal(ws, in_features, rng));
  bias = Parameter(name + ".bias", Tensor(Shape{out_features, 1, 1, 1}));
}

Tensor FullyConnected::forward(const Tensor& x) {
  input_ = x;
  return fully_connected(x, weight.value, &bias.value);
}

Tensor FullyConnected::backward(const Tensor& grad_out) {
  Tensor dx;
  fully_connected_backward(input_, weight.value, grad_out, &dx, &weight.grad, &bias.grad);
  return dx;
}

void FullyConnected::collect_parameters(std::vector<Parameter*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

Tensor AvgPool2d::forward(const Tensor& x) {
  input_shape_ = x.shape;
  return avg_pool(x, k_);
}

Tensor AvgPool2d::backward(const Tensor& grad_out) { return avg_pool_backward(input_shape_, grad_out, k_); }

Tensor GlobalAvgPool::forward(const Tensor& x) {
  input_shape_ = x.shape;
  return global_avg_pool(x);
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) { return global_avg_pool_backward(input_shape_, grad_out); }

Module& Sequential::add(std::unique_ptr<Module> m) {
  layers_.push_back(std::move(m));
  return *layers_.back();
}

Tensor Sequential::forward(const Tensor& x) {
  Tensor h = x;
  for (auto& l : layers_) h = l->forward(h);
  return h;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

void Sequential::collect_parameters(std::vector<Parameter*>& out) {
  for (auto& l : layers_) l->collect_parameters(out);
}

ResidualBlock::ResidualBlock(const std::string& name, int channels, Rng& rng, int kernel, Padding padding)
    : conv1(name + ".conv1", channels, channels, kernel, rng, {padding, 1, true, false}),
      conv2(name + ".conv2", channels, channels, kernel, rng, {padding, 1, true, true}) {}

Tensor ResidualBlock::forward(const Tensor& x) {
  if (x.shape.c != conv1.weight.value.shape.c) throw std::invalid_argument("ResidualBlock: channel mismatch on skip");
  Tensor y = conv2.forward(act_.forward(conv1.forward(x)));
  add_inplace(y, x);
  return y;
}

Tensor ResidualBlock::backward(const Tensor& grad_out) {
  Tensor g = conv1.backward(act_.backward(conv2.backward(grad_out)));
  add_inplace(g, grad_out);
  return g;
}

void ResidualBlock::collect_parameters(std::vector<Parameter*>& out) {
  conv1.collect_parameters(out);
  conv2.collect_parameters(out);
}

BottleneckBlock::BottleneckBlock(const std::string& name, int channels, int mid_channels, Rng& rng)
    : reduce(name + ".reduce", channels, mid_channels, 1, rng),
      conv(name + ".conv", mid_channels, mid_channels, 3, rng),
      expand(name + ".expand", mid_channels, channels, 1, rng, {Padding::Zero, 1, true, true}) {}

Tensor BottleneckBlock::forward(const Tensor& x) {
  if (x.shape.c != reduce.weight.value.shape.c) throw std::invalid_argument("BottleneckBlock: channel mismatch on skip");
  Tensor y = expand.forward(act2_.forward(conv.forward(act1_.forward(reduce.forward(x)))));
  add_inplace(y, x);
  return y;
}

Tensor BottleneckBlock::backward(const Tensor& grad_out) {
  Tensor g = reduce.backward(act1_.backward(conv.backward(act2_.backward(expand.backward(grad_out)))));
  add_inplace(g, grad_out);
  return g;
}

void BottleneckBlock::collect_parameters(std::vector<Parameter*>& out) {
  reduce.collect_parameters(out);
  conv.collect_parameters(out);
  expand.collect_parameters(out);
}

}  // namespace tlsr::nn
