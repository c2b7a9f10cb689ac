#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "tlsr/errors.hpp"
#include "tlsr/nn/adam.hpp"
#include "tlsr/nn/checkpoint.hpp"
#include "tlsr/nn/grad_check.hpp"
#include "tlsr/nn/layers.hpp"

using namespace tlsr;
using namespace tlsr::nn;

namespace {

constexpr double kGradTol = 1e-4;

Tensor random_tensor(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(s);
  for (auto& v : t.data) v = rng.uniform(-1.0, 1.0);
  return t;
}

// Nudges every parameter off zero so zero-initialised layers are exercised too.
void perturb(Module& m, std::uint64_t seed) {
  Rng rng(seed);
  for (Parameter* p : m.parameters())
    for (auto& v : p->value.data) v += rng.normal(0.0, 0.3);
}

void expect_grad_ok(Module& m, const Tensor& x) {
  const GradCheckResult r = grad_check(m, x);
  EXPECT_GT(r.checked, 0u);
  EXPECT_LT(r.max_rel_error, kGradTol) << "worst entry " << r.worst;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("tlsr_layers_" + name);
}

}  // namespace

TEST(GradCheck, Conv2dZeroAndReflect) {
  Rng rng(1);
  Conv2d zero("c", 3, 4, 3, rng);
  expect_grad_ok(zero, random_tensor({2, 3, 5, 6}, 2));
  Conv2d refl("r", 2, 2, 3, rng, {.padding = Padding::Reflect, .groups = 1, .bias = false});
  expect_grad_ok(refl, random_tensor({1, 2, 6, 5}, 3));
  Conv2d grouped("g", 4, 4, 3, rng, {.padding = Padding::Zero, .groups = 2});
  expect_grad_ok(grouped, random_tensor({1, 4, 5, 5}, 4));
}

TEST(GradCheck, ActivationsPoolsAndShuffle) {
  Sigmoid sig;
  expect_grad_ok(sig, random_tensor({2, 3, 2, 2}, 5));
  ReLU relu;
  expect_grad_ok(relu, random_tensor({2, 3, 3, 3}, 6));
  AvgPool2d pool(2);
  expect_grad_ok(pool, random_tensor({1, 2, 4, 6}, 7));
  GlobalAvgPool gap;
  expect_grad_ok(gap, random_tensor({2, 3, 3, 2}, 8));
  PixelShuffle ps(2);
  expect_grad_ok(ps, random_tensor({1, 8, 2, 3}, 9));
}

TEST(GradCheck, FullyConnected) {
  Rng rng(10);
  FullyConnected fc("fc", 6, 4, rng);
  expect_grad_ok(fc, random_tensor({3, 6, 1, 1}, 11));
}

TEST(GradCheck, ResidualAndBottleneckBlocks) {
  Rng rng(12);
  ResidualBlock rb("rb", 3, rng);
  perturb(rb, 13);
  expect_grad_ok(rb, random_tensor({2, 3, 5, 5}, 14));
  BottleneckBlock bb("bb", 4, 2, rng);
  perturb(bb, 15);
  expect_grad_ok(bb, random_tensor({1, 4, 6, 6}, 16));
}

TEST(GradCheck, SequentialChain) {
  Rng rng(17);
  Sequential seq;
  seq.emplace<Conv2d>("a", 3, 4, 3, rng);
  seq.emplace<ReLU>();
  seq.emplace<AvgPool2d>(2);
  seq.emplace<GlobalAvgPool>();
  seq.emplace<FullyConnected>("fc", 4, 1, rng);
  seq.emplace<Sigmoid>();
  expect_grad_ok(seq, random_tensor({2, 3, 4, 4}, 18));
  EXPECT_EQ(seq.parameters().size(), 4u);
}

TEST(Layers, ResidualBlockStartsAsIdentity) {
  Rng rng(19);
  ResidualBlock rb("rb", 4, rng);
  const Tensor x = random_tensor({2, 4, 5, 5}, 20);
  EXPECT_EQ(rb.forward(x).data, x.data);
}

TEST(Layers, KaimingVariance) {
  Rng rng(21);
  const Tensor w = kaiming_normal({64, 32, 3, 3}, 32 * 9, rng);
  double ss = 0.0;
  for (double v : w.data) ss += v * v;
  EXPECT_NEAR(ss / w.numel(), 2.0 / (32 * 9), 0.05 * 2.0 / (32 * 9));
}

TEST(Adam, FirstTwoStepsMatchHandComputation) {
  Parameter p("p", Tensor({1, 2, 1, 1}));
  p.value.data = {1.0, -2.0};
  std::vector<Parameter*> ps{&p};
  Adam opt(ps, {.lr = 0.1, .beta1 = 0.9, .beta2 = 0.999, .eps = 1e-8});
  p.grad.data = {0.5, -4.0};
  opt.step();
  // Step 1: mhat = g, vhat = g^2, so the move is lr * sign(g) up to eps.
  EXPECT_NEAR(p.value.data[0], 1.0 - 0.1 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(p.value.data[1], -2.0 + 0.1 * 4.0 / (4.0 + 1e-8), 1e-15);
  const double after_one = p.value.data[0];
  p.grad.data = {1.5, 0.0};
  opt.step();
  const double m = 0.9 * 0.05 + 0.1 * 1.5, v = 0.999 * 0.00025 + 0.001 * 2.25;
  const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
  EXPECT_NEAR(p.value.data[0], after_one - 0.1 * mhat / (std::sqrt(vhat) + 1e-8), 1e-12);
  EXPECT_EQ(opt.state().step, 2);
  opt.zero_grad();
  EXPECT_EQ(p.grad.data, (Buffer{0.0, 0.0}));
}

TEST(Adam, ScalarThreeStepRecurrence) {
  Parameter p("p", Tensor({1, 1, 1, 1}));
  std::vector<Parameter*> ps{&p};
  Adam opt(ps, {.lr = 0.01});
  double theta = 0.0, m = 0.0, v = 0.0;
  const double grads[3] = {1.0, -1.0, 0.5};
  for (int t = 1; t <= 3; ++t) {
    const double g = grads[t - 1];
    p.grad.data[0] = g;
    opt.step();
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    theta -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(p.value.data[0], theta, 1e-15) << "step " << t;
    if (t == 1) {
      EXPECT_NEAR(p.value.data[0], -0.01, 1e-9);
    }
  }
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(22);
  Conv2d conv("conv", 3, 5, 3, rng);
  perturb(conv, 23);
  auto params = conv.parameters();
  Adam opt(params);
  conv.weight.grad = random_tensor(conv.weight.value.shape, 24);
  opt.step();

  Checkpoint ck;
  ck.step = 77;
  ck.meta["kind"] = "test";
  ck.meta["weird"] = "a b\tc\n";
  export_parameters(params, ck);
  export_adam(params, opt.state(), ck);
  const auto path = temp_path("roundtrip.ckpt");
  save_checkpoint(path, ck);
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.step, 77u);
  EXPECT_EQ(back.meta, ck.meta);
  EXPECT_EQ(back.meta_or("missing", "x"), "x");

  Rng rng2(99);
  Conv2d other("conv", 3, 5, 3, rng2);
  auto other_params = other.parameters();
  import_parameters(other_params, back);
  EXPECT_EQ(other.weight.value.data, conv.weight.value.data);
  EXPECT_EQ(other.bias.value.data, conv.bias.value.data);
  AdamState st = make_adam_state(other_params);
  import_adam(other_params, back, st);
  EXPECT_EQ(st.step, 1);
  EXPECT_EQ(st.m[0].data, opt.state().m[0].data);
  EXPECT_EQ(st.v[0].data, opt.state().v[0].data);
  std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptOrMismatchedInputsAreDataErrors) {
  const auto missing = temp_path("does_not_exist.ckpt");
  EXPECT_THROW(load_checkpoint(missing), DataError);

  const auto junk = temp_path("junk.ckpt");
  std::ofstream(junk) << "definitely not a checkpoint";
  EXPECT_THROW(load_checkpoint(junk), DataError);

  Rng rng(25);
  Conv2d conv("conv", 2, 2, 3, rng);
  auto params = conv.parameters();
  Checkpoint ck;
  export_parameters(params, ck);
  const auto good = temp_path("good.ckpt");
  save_checkpoint(good, ck);
  const auto bytes = std::filesystem::file_size(good);
  std::filesystem::resize_file(good, bytes - 5);
  EXPECT_THROW(load_checkpoint(good), DataError);

  Conv2d wider("conv", 2, 3, 3, rng);
  auto wider_params = wider.parameters();
  EXPECT_THROW(import_parameters(wider_params, ck), DataError);
  Conv2d renamed("other", 2, 2, 3, rng);
  auto renamed_params = renamed.parameters();
  EXPECT_THROW(import_parameters(renamed_params, ck), DataError);
  std::filesystem::remove(junk);
  std::filesystem::remove(good);
}
