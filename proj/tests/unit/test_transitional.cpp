#include <gtest/gtest.h>

#include <cmath>

#include "tlsr/nn/grad_check.hpp"
#include "tlsr/transitional.hpp"

using namespace tlsr;
using namespace tlsr::transitional;
using nn::Shape;

namespace {

Tensor random_tensor(Shape s, Rng& rng, double scale = 1.0) {
  Tensor t(s);
  for (auto& v : t.data) v = rng.uniform(-scale, scale);
  return t;
}

void randomize(nn::Module& m, Rng& rng) {
  for (nn::Parameter* p : m.parameters())
    for (auto& v : p->value.data) v = rng.normal(0.0, 0.3);
}

double projected(const Tensor& y, const Tensor& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.data.size(); ++i) s += y.data[i] * r.data[i];
  return s;
}

}  // namespace

TEST(Interpolate, LerpsWeightsAndBiases) {
  Rng rng(1);
  TransitionalParams tp;
  tp.theta0 = {random_tensor({2, 2, 3, 3}, rng), random_tensor({2, 1, 1, 1}, rng)};
  tp.theta1 = {random_tensor({2, 2, 3, 3}, rng), random_tensor({2, 1, 1, 1}, rng)};
  const auto mid = interpolate_params(tp, 0.3);
  for (std::size_t i = 0; i < mid.weight.numel(); ++i)
    EXPECT_NEAR(mid.weight.data[i], 0.7 * tp.theta0.weight.data[i] + 0.3 * tp.theta1.weight.data[i], 1e-15);
  EXPECT_NEAR(mid.bias.data[1], 0.7 * tp.theta0.bias.data[1] + 0.3 * tp.theta1.bias.data[1], 1e-15);
  EXPECT_EQ(interpolate_params(tp, 0.0).weight.data, tp.theta0.weight.data);
  EXPECT_EQ(interpolate_params(tp, 1.0).weight.data, tp.theta1.weight.data);
  tp.theta1.weight = Tensor({2, 2, 1, 1});
  EXPECT_THROW(interpolate_params(tp, 0.5), std::invalid_argument);
}

TEST(BilinearExpansion, HoldsForLinearLayersOnTwentyInstances) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int cin = 1 + trial % 3, cout = 1 + (trial / 3) % 3;
    TransitionalParams tp;
    tp.theta0.weight = random_tensor({cout, cin, 3, 3}, rng);
    tp.theta1.weight = random_tensor({cout, cin, 3, 3}, rng);
    const Tensor x0 = random_tensor({1, cin, 6, 7}, rng);
    const Tensor x1 = random_tensor({1, cin, 6, 7}, rng);
    const double tau = rng.uniform();
    EXPECT_LT(bilinear_expansion_residual(tp, x0, x1, tau), 1e-6) << "trial " << trial;
  }
}

TEST(BilinearExpansion, BreaksWithNonlinearity) {
  Rng rng(3);
  TransitionalParams tp;
  tp.theta0.weight = random_tensor({3, 3, 3, 3}, rng);
  tp.theta1.weight = random_tensor({3, 3, 3, 3}, rng);
  const Tensor x0 = random_tensor({1, 3, 8, 8}, rng);
  const Tensor x1 = random_tensor({1, 3, 8, 8}, rng);
  EXPECT_GT(bilinear_expansion_residual(tp, x0, x1, 0.4, true), 1e-3);
  tp.theta0.bias = Tensor({3, 1, 1, 1});
  tp.theta1.bias = Tensor({3, 1, 1, 1});
  EXPECT_THROW(bilinear_expansion_residual(tp, x0, x1, 0.4), std::invalid_argument);
}

class GroupedBatch : public ::testing::TestWithParam<int> {};

TEST_P(GroupedBatch, MatchesPerSampleLoopBitwise) {
  const int B = GetParam();
  Rng rng(4);
  TransitionalConv2d conv("t", 3, 5, 3, rng);
  randomize(conv, rng);
  const Tensor x = random_tensor({B, 3, 9, 10}, rng);
  std::vector<double> taus;
  for (int b = 0; b < B; ++b) taus.push_back(rng.uniform());
  conv.set_taus(taus);
  const Tensor y = conv.forward(x);
  ASSERT_EQ(y.shape, (Shape{B, 5, 9, 10}));
  for (int b = 0; b < B; ++b) {
    const auto p = conv.at(taus[b]);
    Tensor xb({1, 3, 9, 10});
    std::copy(x.sample(b), x.sample(b) + xb.numel(), xb.data.begin());
    const Tensor yb = nn::conv2d(xb, p.weight, &p.bias, nn::Padding::Zero, 1);
    for (std::size_t i = 0; i < yb.numel(); ++i) ASSERT_EQ(yb.data[i], y.sample(b)[i]) << "sample " << b;
  }
}

INSTANTIATE_TEST_SUITE_P(BatchSizes, GroupedBatch, ::testing::Values(1, 2, 4));

TEST(TransitionalConv, EndpointsReduceToPrimaries) {
  Rng rng(5);
  TransitionalConv2d conv("t", 2, 2, 3, rng);
  randomize(conv, rng);
  const Tensor x = random_tensor({2, 2, 6, 6}, rng);
  const std::vector<double> taus{0.0, 1.0};
  conv.set_taus(taus);
  const Tensor y = conv.forward(x);
  const auto tp = conv.params();
  for (int b = 0; b < 2; ++b) {
    const auto& p = b == 0 ? tp.theta0 : tp.theta1;
    Tensor xb({1, 2, 6, 6});
    std::copy(x.sample(b), x.sample(b) + xb.numel(), xb.data.begin());
    const Tensor yb = nn::conv2d(xb, p.weight, &p.bias, nn::Padding::Zero, 1);
    for (std::size_t i = 0; i < yb.numel(); ++i) ASSERT_EQ(yb.data[i], y.sample(b)[i]);
  }
}

TEST(TransitionalConv, RejectsTauCountAndRange) {
  Rng rng(6);
  TransitionalConv2d conv("t", 2, 2, 3, rng);
  const std::vector<double> bad{1.5};
  EXPECT_THROW(conv.set_taus(bad), std::invalid_argument);
  const std::vector<double> one{0.5};
  conv.set_taus(one);
  EXPECT_THROW(conv.forward(Tensor({2, 2, 4, 4})), std::invalid_argument);
}

TEST(TransitionalConv, GradCheck) {
  Rng rng(7);
  TransitionalConv2d conv("t", 3, 2, 3, rng);
  randomize(conv, rng);
  const std::vector<double> taus{0.2, 0.9};
  conv.set_taus(taus);
  const auto r = nn::grad_check(conv, random_tensor({2, 3, 5, 4}, rng));
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(TransitionalBlock, GradCheckAndTauGradient) {
  Rng rng(8);
  TransitionalStack stack("s", 2, 3, rng);
  randomize(stack, rng);
  std::vector<double> taus{0.25, 0.6};
  stack.set_taus(taus);
  const Tensor x = random_tensor({2, 3, 5, 5}, rng);
  const auto r = nn::grad_check(stack, x);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;

  const Tensor proj = random_tensor({2, 3, 5, 5}, rng);
  stack.zero_grad();
  transitional_forward(stack, x, taus);
  stack.backward(proj);
  const std::vector<double> analytic = stack.tau_grad();
  ASSERT_EQ(analytic.size(), 2u);
  const double h = 1e-5;
  for (int b = 0; b < 2; ++b) {
    auto up = taus, down = taus;
    up[b] += h;
    down[b] -= h;
    const double numeric =
        (projected(transitional_forward(stack, x, up), proj) - projected(transitional_forward(stack, x, down), proj)) / (2 * h);
    EXPECT_NEAR(analytic[b], numeric, 1e-6 * std::max(1.0, std::abs(numeric))) << "sample " << b;
  }
}

TEST(TransitionalBlock, ExportMatchesPlainBlockBitwise) {
  Rng rng(9);
  TransitionalResidualBlock tb("tb", 3, rng);
  randomize(tb, rng);
  nn::ResidualBlock plain("plain", 3, rng);
  tb.export_to(plain, 0.35);
  const Tensor x = random_tensor({1, 3, 7, 7}, rng);
  const std::vector<double> taus{0.35};
  tb.set_taus(taus);
  EXPECT_EQ(tb.forward(x).data, plain.forward(x).data);
}

TEST(TransitionalBlock, FreshBlockIsIdentity) {
  Rng rng(10);
  TransitionalStack stack("s", 2, 4, rng);
  const Tensor x = random_tensor({3, 4, 5, 5}, rng);
  const std::vector<double> taus{0.0, 0.5, 1.0};
  EXPECT_EQ(transitional_forward(stack, x, taus).data, x.data);
  const std::vector<double> short_taus{0.1};
  EXPECT_THROW(transitional_forward(stack, x, short_taus), std::invalid_argument);
}
