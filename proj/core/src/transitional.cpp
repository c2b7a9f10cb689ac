#include "tlsr/transitional.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tlsr::transitional {

using nn::Shape;

namespace {

void check_tau(double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in [0, 1], got " + std::to_string(tau));
}

Tensor lerp(const Tensor& a, const Tensor& b, double wa, double wb) {
  Tensor out(a.shape);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = wa * a.data[i] + wb * b.data[i];
  return out;
}

}  // namespace

LayerParams interpolate_params(const TransitionalParams& tp, double tau) {
  check_tau(tau);
  if (!(tp.theta0.weight.shape == tp.theta1.weight.shape) || tp.theta0.has_bias() != tp.theta1.has_bias() ||
      (tp.theta0.has_bias() && !(tp.theta0.bias.shape == tp.theta1.bias.shape)))
    throw std::invalid_argument("interpolate_params: theta0/theta1 shape mismatch");
  LayerParams out;
  out.weight = lerp(tp.theta0.weight, tp.theta1.weight, 1.0 - tau, tau);
  if (tp.theta0.has_bias()) out.bias = lerp(tp.theta0.bias, tp.theta1.bias, 1.0 - tau, tau);
  return out;
}

TransitionalConv2d::TransitionalConv2d(const std::string& name, int in_channels, int out_channels, int kernel, Rng& rng,
                                       bool zero_init, nn::Padding pad)
    : padding(pad) {
  const Shape ws{out_channels, in_channels, kernel, kernel};
  const int fan_in = in_channels * kernel * kernel;
  auto init = [&] { return zero_init ? Tensor(ws) : nn::kaiming_normal(ws, fan_in, rng); };
  weight0 = nn::Parameter(name + ".theta0.weight", init());
  bias0 = nn::Parameter(name + ".theta0.bias", Tensor(Shape{out_channels, 1, 1, 1}));
  weight1 = nn::Parameter(name + ".theta1.weight", init());
  bias1 = nn::Parameter(name + ".theta1.bias", Tensor(Shape{out_channels, 1, 1, 1}));
}

void TransitionalConv2d::set_taus(std::span<const double> taus) {
  for (double t : taus) check_tau(t);
  taus_.assign(taus.begin(), taus.end());
}

Tensor TransitionalConv2d::forward(const Tensor& x) {
  const int batch = x.shape.n;
  if (static_cast<std::size_t>(batch) != taus_.size())
    throw std::invalid_argument("TransitionalConv2d: " + std::to_string(taus_.size()) + " taus for batch of " +
                                std::to_string(batch));
  const Shape ws = weight0.value.shape;
  if (x.shape.c != ws.c) throw std::invalid_argument("TransitionalConv2d: channel mismatch");
  const std::size_t per_w = ws.numel();
  const std::size_t per_b = static_cast<std::size_t>(ws.n);

  stacked_weight_ = Tensor(Shape{batch * ws.n, ws.c, ws.h, ws.w});
  Tensor stacked_bias(Shape{batch * ws.n, 1, 1, 1});
  for (int b = 0; b < batch; ++b) {
    const double t = taus_[b];
    double* w = stacked_weight_.data.data() + b * per_w;
    for (std::size_t i = 0; i < per_w; ++i) w[i] = (1.0 - t) * weight0.value.data[i] + t * weight1.value.data[i];
    double* bs = stacked_bias.data.data() + b * per_b;
    for (std::size_t i = 0; i < per_b; ++i) bs[i] = (1.0 - t) * bias0.value.data[i] + t * bias1.value.data[i];
  }
  input_ = x.reshaped(Shape{1, batch * x.shape.c, x.shape.h, x.shape.w});
  Tensor y = nn::conv2d(input_, stacked_weight_, &stacked_bias, padding, batch);
  return y.reshaped(Shape{batch, ws.n, x.shape.h, x.shape.w});
}

Tensor TransitionalConv2d::backward(const Tensor& grad_out) {
  const int batch = static_cast<int>(taus_.size());
  const Shape ws = weight0.value.shape;
  const std::size_t per_w = ws.numel();
  const std::size_t per_b = static_cast<std::size_t>(ws.n);

  Tensor dstacked(stacked_weight_.shape);
  Tensor dbias(Shape{batch * ws.n, 1, 1, 1});
  Tensor dx;
  const Tensor gy = grad_out.reshaped(Shape{1, batch * ws.n, grad_out.shape.h, grad_out.shape.w});
  nn::conv2d_backward(input_, stacked_weight_, gy, padding, batch, &dx, &dstacked, &dbias);

  tau_grad_.assign(batch, 0.0);
  for (int b = 0; b < batch; ++b) {
    const double t = taus_[b];
    const double* g = dstacked.data.data() + b * per_w;
    double tg = 0.0;
    for (std::size_t i = 0; i < per_w; ++i) {
      weight0.grad.data[i] += (1.0 - t) * g[i];
      weight1.grad.data[i] += t * g[i];
      tg += g[i] * (weight1.value.data[i] - weight0.value.data[i]);
    }
    const double* gb = dbias.data.data() + b * per_b;
    for (std::size_t i = 0; i < per_b; ++i) {
      bias0.grad.data[i] += (1.0 - t) * gb[i];
      bias1.grad.data[i] += t * gb[i];
      tg += gb[i] * (bias1.value.data[i] - bias0.value.data[i]);
    }
    tau_grad_[b] = tg;
  }
  return dx.reshaped(Shape{batch, ws.c, grad_out.shape.h, grad_out.shape.w});
}

void TransitionalConv2d::collect_parameters(std::vector<nn::Parameter*>& out) {
  out.push_back(&weight0);
  out.push_back(&bias0);
  out.push_back(&weight1);
  out.push_back(&bias1);
}

TransitionalParams TransitionalConv2d::params() const {
  return {{weight0.value, bias0.value}, {weight1.value, bias1.value}};
}

void TransitionalConv2d::set_params(const TransitionalParams& tp) {
  if (!(tp.theta0.weight.shape == weight0.value.shape) || !(tp.theta1.weight.shape == weight1.value.shape) ||
      !(tp.theta0.bias.shape == bias0.value.shape) || !(tp.theta1.bias.shape == bias1.value.shape))
    throw std::invalid_argument("TransitionalConv2d::set_params: shape mismatch");
  weight0.value = tp.theta0.weight;
  bias0.value = tp.theta0.bias;
  weight1.value = tp.theta1.weight;
  bias1.value = tp.theta1.bias;
}

TransitionalResidualBlock::TransitionalResidualBlock(const std::string& name, int channels, Rng& rng, int kernel)
    : conv1(name + ".conv1", channels, channels, kernel, rng, false),
      conv2(name + ".conv2", channels, channels, kernel, rng, true) {}

void TransitionalResidualBlock::set_taus(std::span<const double> taus) {
  conv1.set_taus(taus);
  conv2.set_taus(taus);
}

Tensor TransitionalResidualBlock::forward(const Tensor& x) {
  Tensor y = conv2.forward(act_.forward(conv1.forward(x)));
  nn::add_inplace(y, x);
  return y;
}

Tensor TransitionalResidualBlock::backward(const Tensor& grad_out) {
  Tensor g = conv1.backward(act_.backward(conv2.backward(grad_out)));
  nn::add_inplace(g, grad_out);
  return g;
}

void TransitionalResidualBlock::collect_parameters(std::vector<nn::Parameter*>& out) {
  conv1.collect_parameters(out);
  conv2.collect_parameters(out);
}

void TransitionalResidualBlock::export_to(nn::ResidualBlock& plain, double tau) const {
  plain.conv1.set_layer_params(conv1.at(tau));
  plain.conv2.set_layer_params(conv2.at(tau));
}

std::vector<double> TransitionalResidualBlock::tau_grad() const {
  std::vector<double> g = conv1.tau_grad();
  const auto& g2 = conv2.tau_grad();
  for (std::size_t i = 0; i < g.size() && i < g2.size(); ++i) g[i] += g2[i];
  return g;
}

TransitionalStack::TransitionalStack(const std::string& name, int blocks, int channels, Rng& rng) {
  if (blocks < 1) throw std::invalid_argument("TransitionalStack: need at least one block");
  for (int i = 0; i < blocks; ++i)
    blocks_.push_back(std::make_unique<TransitionalResidualBlock>(name + "." + std::to_string(i), channels, rng));
}

void TransitionalStack::set_taus(std::span<const double> taus) {
  for (auto& b : blocks_) b->set_taus(taus);
}

Tensor TransitionalStack::forward(const Tensor& x) {
  Tensor h = x;
  for (auto& b : blocks_) h = b->forward(h);
  return h;
}

Tensor TransitionalStack::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

void TransitionalStack::collect_parameters(std::vector<nn::Parameter*>& out) {
  for (auto& b : blocks_) b->collect_parameters(out);
}

std::vector<double> TransitionalStack::tau_grad() const {
  std::vector<double> total;
  for (const auto& b : blocks_) {
    const auto g = b->tau_grad();
    if (total.empty()) total.assign(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) total[i] += g[i];
  }
  return total;
}

Tensor transitional_forward(TransitionalStack& stack, const Tensor& x, std::span<const double> taus) {
  if (taus.size() != static_cast<std::size_t>(x.shape.n))
    throw std::invalid_argument("transitional_forward: tau count " + std::to_string(taus.size()) + " != batch " +
                                std::to_string(x.shape.n));
  stack.set_taus(taus);
  return stack.forward(x);
}

double bilinear_expansion_residual(const TransitionalParams& tp, const Tensor& x0, const Tensor& x1, double tau,
                                   bool apply_relu) {
  check_tau(tau);
  if (tp.theta0.has_bias() || tp.theta1.has_bias())
    throw std::invalid_argument("bilinear_expansion_residual: layer must be bias-free");
  if (!(x0.shape == x1.shape)) throw std::invalid_argument("bilinear_expansion_residual: input shape mismatch");
  if (!(tp.theta0.weight.shape == tp.theta1.weight.shape))
    throw std::invalid_argument("bilinear_expansion_residual: theta shape mismatch");

  auto layer = [&](const Tensor& x, const Tensor& w) {
    Tensor y = nn::conv2d(x, w, nullptr, nn::Padding::Zero, 1);
    return apply_relu ? nn::relu(y) : y;
  };
  const double t = tau;
  const double u = 1.0 - tau;
  const Tensor wt = lerp(tp.theta0.weight, tp.theta1.weight, t, u);
  const Tensor xt = lerp(x0, x1, t, u);
  const Tensor lhs = layer(xt, wt);
  const Tensor f00 = layer(x0, tp.theta0.weight);
  const Tensor f10 = layer(x0, tp.theta1.weight);
  const Tensor f01 = layer(x1, tp.theta0.weight);
  const Tensor f11 = layer(x1, tp.theta1.weight);
  double worst = 0.0;
  for (std::size_t i = 0; i < lhs.data.size(); ++i) {
    const double rhs = t * t * f00.data[i] + t * u * f10.data[i] + t * u * f01.data[i] + u * u * f11.data[i];
    worst = std::max(worst, std::abs(lhs.data[i] - rhs));
  }
  return worst;
}

}  // namespace tlsr::transitional
