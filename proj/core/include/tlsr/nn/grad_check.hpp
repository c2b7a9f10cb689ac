#pragma once

#include <cstdint>
#include <string>

#include "tlsr/nn/layers.hpp"

namespace tlsr::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst;  // "input[i]" or "<param>[i]"
  std::size_t checked = 0;
};

/// Compares analytic gradients with central differences for the scalar
/// L = sum(r * module(x)), r a fixed random projection.
///
/// Relative error per entry is |a - n| / max(|a|, |n|, floor); `floor`
/// keeps entries whose true gradient is ~0 from dominating on round-off.
GradCheckResult grad_check(Module& module, const Tensor& input, double eps = 1e-5, double floor = 1e-6,
                           std::uint64_t seed = 1234);

}  // namespace tlsr::nn
