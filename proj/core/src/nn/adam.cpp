#include "tlsr/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace tlsr::nn {

AdamState make_adam_state(std::span<Parameter* const> params, AdamSettings settings) {
  AdamState s;
  s.settings = settings;
  for (const Parameter* p : params) {
    s.m.emplace_back(p->value.shape);
    s.v.emplace_back(p->value.shape);
  }
  return s;
}

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw std::invalid_argument("adam_step: state does not match parameter list");
  const AdamSettings& cfg = state.settings;
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    if (!(p.grad.shape == p.value.shape) || !(m.shape == p.value.shape))
      throw std::invalid_argument("adam_step: shape mismatch for " + p.name);
    for (std::size_t i = 0; i < p.value.data.size(); ++i) {
      const double g = p.grad.data[i];
      m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g;
      v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p.value.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

Adam::Adam(std::vector<Parameter*> params, AdamSettings settings)
    : params_(std::move(params)), state_(make_adam_state(params_, settings)) {}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->grad.fill(0.0);
}

}  // namespace tlsr::nn
