#include <gtest/gtest.h>

#include <cmath>

#include "tlsr/nn/ops.hpp"
#include "tlsr/rng.hpp"

using namespace tlsr;
using namespace tlsr::nn;

namespace {

Tensor random_tensor(Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Tensor t(s);
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

// Direct six-loop cross-correlation.
Tensor conv_oracle(const Tensor& x, const Tensor& w, const Tensor* b, Padding pad, int groups) {
  const int cout = w.shape.n, cin_g = w.shape.c, k = w.shape.h, r = k / 2;
  const int cout_g = cout / groups;
  Tensor y({x.shape.n, cout, x.shape.h, x.shape.w});
  for (int n = 0; n < x.shape.n; ++n)
    for (int o = 0; o < cout; ++o) {
      const int g = o / cout_g;
      for (int i = 0; i < x.shape.h; ++i)
        for (int j = 0; j < x.shape.w; ++j) {
          long double acc = b ? b->data[o] : 0.0;
          for (int c = 0; c < cin_g; ++c)
            for (int di = 0; di < k; ++di)
              for (int dj = 0; dj < k; ++dj) {
                int yy = i + di - r, xx = j + dj - r;
                if (pad == Padding::Zero) {
                  if (yy < 0 || yy >= x.shape.h || xx < 0 || xx >= x.shape.w) continue;
                } else {
                  yy = reflect(yy, x.shape.h);
                  xx = reflect(xx, x.shape.w);
                }
                acc += static_cast<long double>(w.at(o, c, di, dj)) * x.at(n, g * cin_g + c, yy, xx);
              }
          y.at(n, o, i, j) = static_cast<double>(acc);
        }
    }
  return y;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

}  // namespace

struct ConvCase {
  Shape x;
  int cout, k, groups;
  Padding pad;
};

class ConvOracle : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvOracle, ForwardMatchesDirectLoops) {
  const auto p = GetParam();
  const Tensor x = random_tensor(p.x, 1);
  const Tensor w = random_tensor({p.cout, p.x.c / p.groups, p.k, p.k}, 2);
  const Tensor b = random_tensor({p.cout, 1, 1, 1}, 3);
  EXPECT_LT(max_abs_diff(conv2d(x, w, &b, p.pad, p.groups), conv_oracle(x, w, &b, p.pad, p.groups)), 1e-12);
  EXPECT_LT(max_abs_diff(conv2d(x, w, nullptr, p.pad, p.groups), conv_oracle(x, w, nullptr, p.pad, p.groups)), 1e-12);
}

TEST_P(ConvOracle, BackwardIsTheAdjointOfForward) {
  // <gy, conv(x)> is bilinear: d/dx gives grad_x, d/dw gives grad_w, d/db the sum of gy.
  const auto p = GetParam();
  const Tensor x = random_tensor(p.x, 4);
  const Tensor w = random_tensor({p.cout, p.x.c / p.groups, p.k, p.k}, 5);
  const Tensor gy = random_tensor({p.x.n, p.cout, p.x.h, p.x.w}, 6);
  Tensor gx, gw(w.shape), gb({p.cout, 1, 1, 1});
  conv2d_backward(x, w, gy, p.pad, p.groups, &gx, &gw, &gb);
  const double ref = dot(gy, conv2d(x, w, nullptr, p.pad, p.groups));
  EXPECT_NEAR(dot(gx, x), ref, 1e-10 * (1.0 + std::abs(ref)));
  EXPECT_NEAR(dot(gw, w), ref, 1e-10 * (1.0 + std::abs(ref)));
  for (int o = 0; o < p.cout; ++o) {
    double s = 0.0;
    for (int n = 0; n < p.x.n; ++n)
      for (int i = 0; i < p.x.h; ++i)
        for (int j = 0; j < p.x.w; ++j) s += gy.at(n, o, i, j);
    EXPECT_NEAR(gb.data[o], s, 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(Shapes, ConvOracle,
                         ::testing::Values(ConvCase{{2, 3, 7, 9}, 4, 3, 1, Padding::Zero},
                                           ConvCase{{2, 3, 7, 9}, 4, 3, 1, Padding::Reflect},
                                           ConvCase{{1, 4, 6, 5}, 6, 5, 2, Padding::Zero},
                                           ConvCase{{1, 4, 6, 5}, 4, 5, 4, Padding::Reflect},
                                           ConvCase{{3, 2, 1, 1}, 2, 1, 1, Padding::Zero},
                                           ConvCase{{1, 2, 40, 40}, 3, 3, 1, Padding::Zero},
                                           ConvCase{{1, 6, 70, 33}, 3, 3, 3, Padding::Reflect}));

TEST(Conv, GroupedViewEqualsPerSampleCallsBitwise) {
  const int B = 3, c = 4;
  const Tensor x = random_tensor({B, c, 11, 13}, 7);
  std::vector<Tensor> ws;
  Tensor stacked({B * c, c, 3, 3});
  for (int b = 0; b < B; ++b) {
    ws.push_back(random_tensor({c, c, 3, 3}, 10 + b));
    std::copy(ws[b].data.begin(), ws[b].data.end(), stacked.data.begin() + b * ws[b].numel());
  }
  const Tensor grouped = conv2d(x.reshaped({1, B * c, 11, 13}), stacked, nullptr, Padding::Zero, B);
  for (int b = 0; b < B; ++b) {
    Tensor xb({1, c, 11, 13});
    std::copy(x.sample(b), x.sample(b) + xb.numel(), xb.data.begin());
    const Tensor yb = conv2d(xb, ws[b], nullptr, Padding::Zero, 1);
    for (std::size_t i = 0; i < yb.numel(); ++i) ASSERT_EQ(yb.data[i], grouped.data[b * yb.numel() + i]);
  }
}

TEST(Conv, RejectsBadShapes) {
  const Tensor x({1, 3, 5, 5});
  EXPECT_THROW(conv2d(x, Tensor({2, 2, 3, 3}), nullptr, Padding::Zero, 1), std::invalid_argument);
  EXPECT_THROW(conv2d(x, Tensor({2, 3, 2, 2}), nullptr, Padding::Zero, 1), std::invalid_argument);
  EXPECT_THROW(conv2d(x, Tensor({2, 1, 3, 3}), nullptr, Padding::Zero, 2), std::invalid_argument);
}

TEST(PixelShuffle, MatchesIndexFormulaAndInverts) {
  const int s = 2;
  const Tensor x = random_tensor({2, 3 * s * s, 4, 5}, 8);
  const Tensor y = pixel_shuffle(x, s);
  ASSERT_EQ(y.shape, (Shape{2, 3, 8, 10}));
  for (int b = 0; b < 2; ++b)
    for (int c = 0; c < 3; ++c)
      for (int h = 0; h < 4; ++h)
        for (int w = 0; w < 5; ++w)
          for (int dy = 0; dy < s; ++dy)
            for (int dx = 0; dx < s; ++dx)
              EXPECT_EQ(y.at(b, c, s * h + dy, s * w + dx), x.at(b, c * s * s + dy * s + dx, h, w));
  EXPECT_EQ(pixel_shuffle_backward(y, s).data, x.data);
  EXPECT_THROW(pixel_shuffle(Tensor({1, 3, 2, 2}), 2), std::invalid_argument);
}

TEST(Pooling, AveragesAndSpreadsGradientEvenly) {
  const Tensor x = random_tensor({2, 3, 4, 6}, 9);
  const Tensor y = avg_pool(x, 2);
  ASSERT_EQ(y.shape, (Shape{2, 3, 2, 3}));
  EXPECT_NEAR(y.at(1, 2, 1, 2), (x.at(1, 2, 2, 4) + x.at(1, 2, 2, 5) + x.at(1, 2, 3, 4) + x.at(1, 2, 3, 5)) / 4.0, 1e-15);
  const Tensor g = avg_pool_backward(x.shape, Tensor(y.shape, 1.0), 2);
  for (double v : g.data) EXPECT_EQ(v, 0.25);
  EXPECT_THROW(avg_pool(Tensor({1, 1, 5, 4}), 2), std::invalid_argument);

  const Tensor gap = global_avg_pool(x);
  ASSERT_EQ(gap.shape, (Shape{2, 3, 1, 1}));
  double s = 0.0;
  for (int h = 0; h < 4; ++h)
    for (int w = 0; w < 6; ++w) s += x.at(0, 1, h, w);
  EXPECT_NEAR(gap.at(0, 1, 0, 0), s / 24.0, 1e-15);
  for (double v : global_avg_pool_backward(x.shape, Tensor(gap.shape, 24.0)).data) EXPECT_NEAR(v, 1.0, 1e-15);
}

TEST(Activations, ReluAndSigmoidValues) {
  Tensor x({1, 4, 1, 1});
  x.data = {-2.0, 0.0, 0.5, 3.0};
  EXPECT_EQ(relu(x).data, (Buffer{0.0, 0.0, 0.5, 3.0}));
  EXPECT_EQ(relu_backward(x, Tensor(x.shape, 1.0)).data, (Buffer{0.0, 0.0, 1.0, 1.0}));
  const Tensor y = sigmoid(x);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(y.data[i], 1.0 / (1.0 + std::exp(-x.data[i])), 1e-15);
  const Tensor g = sigmoid_backward(y, Tensor(x.shape, 1.0));
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(g.data[i], y.data[i] * (1.0 - y.data[i]), 1e-15);
  Tensor big({1, 2, 1, 1});
  big.data = {-800.0, 800.0};
  EXPECT_TRUE(sigmoid(big).all_finite());
}

TEST(FullyConnected, MatchesMatrixProduct) {
  const Tensor x = random_tensor({2, 5, 1, 1}, 11);
  const Tensor w = random_tensor({3, 5, 1, 1}, 12);
  const Tensor b = random_tensor({3, 1, 1, 1}, 13);
  const Tensor y = fully_connected(x, w, &b);
  for (int n = 0; n < 2; ++n)
    for (int o = 0; o < 3; ++o) {
      double s = b.data[o];
      for (int i = 0; i < 5; ++i) s += w.at(o, i, 0, 0) * x.at(n, i, 0, 0);
      EXPECT_NEAR(y.at(n, o, 0, 0), s, 1e-14);
    }
}

TEST(L1Loss, ValueAndSubgradient) {
  Tensor p({1, 4, 1, 1}), t({1, 4, 1, 1});
  p.data = {0.3, 1.0, -1.0, 2.0};
  t.data = {0.5, 1.0, 0.0, 0.0};
  const Loss l = l1_loss(p, t);
  EXPECT_NEAR(l.value, (0.2 + 0.0 + 1.0 + 2.0) / 4.0, 1e-15);
  EXPECT_EQ(l.grad.data, (Buffer{-0.25, 0.0, -0.25, 0.25}));
  EXPECT_THROW(l1_loss(p, Tensor({1, 3, 1, 1})), std::invalid_argument);
}
