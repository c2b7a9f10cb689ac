#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tlsr/nn/tensor.hpp"

namespace tlsr::nn {

struct AdamSettings {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamSettings settings;
  std::int64_t step = 0;
  std::vector<Tensor> m;  // first moments, one per parameter
  std::vector<Tensor> v;  // second moments
};

AdamState make_adam_state(std::span<Parameter* const> params, AdamSettings settings = {});

/// One bias-corrected Adam update of every parameter from its grad slot.
void adam_step(std::span<Parameter* const> params, AdamState& state);

class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamSettings settings = {});

  void step() { adam_step(params_, state_); }
  void zero_grad();
  void set_lr(double lr) { state_.settings.lr = lr; }
  double lr() const { return state_.settings.lr; }

  AdamState& state() { return state_; }
  const AdamState& state() const { return state_; }
  const std::vector<Parameter*>& params() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  AdamState state_;
};

}  // namespace tlsr::nn
