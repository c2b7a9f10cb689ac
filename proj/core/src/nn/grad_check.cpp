#include "tlsr/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "tlsr/rng.hpp"

namespace tlsr::nn {

namespace {

double projected(Module& m, const Tensor& x, const Tensor& r) {
  const Tensor y = m.forward(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.data.size(); ++i) acc += r.data[i] * y.data[i];
  return acc;
}

void record(GradCheckResult& res, double analytic, double numeric, double floor, const std::string& label) {
  const double abs_err = std::abs(analytic - numeric);
  const double rel = abs_err / std::max({std::abs(analytic), std::abs(numeric), floor});
  res.max_abs_error = std::max(res.max_abs_error, abs_err);
  if (rel > res.max_rel_error) {
    res.max_rel_error = rel;
    res.worst = label;
  }
  ++res.checked;
}

}  // namespace

GradCheckResult grad_check(Module& module, const Tensor& input, double eps, double floor, std::uint64_t seed) {
  Rng rng(seed);
  const Tensor y0 = module.forward(input);
  Tensor r(y0.shape);
  for (auto& v : r.data) v = rng.normal();

  module.zero_grad();
  module.forward(input);
  const Tensor dx = module.backward(r);

  std::vector<Parameter*> params = module.parameters();
  std::vector<Tensor> analytic;
  for (Parameter* p : params) analytic.push_back(p->grad);

  GradCheckResult res;
  Tensor x = input;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double orig = x.data[i];
    x.data[i] = orig + eps;
    const double up = projected(module, x, r);
    x.data[i] = orig - eps;
    const double down = projected(module, x, r);
    x.data[i] = orig;
    record(res, dx.data[i], (up - down) / (2.0 * eps), floor, "input[" + std::to_string(i) + "]");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& v = params[k]->value;
    for (std::size_t i = 0; i < v.data.size(); ++i) {
      const double orig = v.data[i];
      v.data[i] = orig + eps;
      const double up = projected(module, input, r);
      v.data[i] = orig - eps;
      const double down = projected(module, input, r);
      v.data[i] = orig;
      record(res, analytic[k].data[i], (up - down) / (2.0 * eps), floor, params[k]->name + "[" + std::to_string(i) + "]");
    }
  }
  return res;
}

}  // namespace tlsr::nn
