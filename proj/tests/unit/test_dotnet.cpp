#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "tlsr/dataset.hpp"
#include "tlsr/dotnet.hpp"
#include "tlsr/errors.hpp"
#include "tlsr/nn/grad_check.hpp"

using namespace tlsr;
using namespace tlsr::dotnet;

namespace {

DoTNetConfig small_config() {
  DoTNetConfig c;
  c.patch_count = 4;
  c.patch_size = 16;
  c.bottleneck_blocks = 2;
  c.channels = 8;
  c.bottleneck_channels = 4;
  c.fc_hidden = 8;
  c.pool_stages = 2;
  return c;
}

Image random_image(int h, int w, Rng& rng) {
  Image img(h, w, 3);
  for (auto& v : img.data) v = rng.uniform();
  return img;
}

}  // namespace

TEST(DotLoss, HandExamples) {
  const std::vector<double> p1{0.5, 0.5}, t1{0.5};
  EXPECT_EQ(dot_loss(p1, t1).value, 0.0);
  const std::vector<double> p2{0.3}, t2{0.5};
  const auto l2 = dot_loss(p2, t2);
  EXPECT_NEAR(l2.value, 0.2, 1e-15);
  EXPECT_EQ(l2.grad[0], -1.0);
}

TEST(DotLoss, MatchesBruteForceForTwoImagesTwoPatches) {
  // preds laid out image-major: [b0t0, b0t1, b1t0, b1t1]
  const std::vector<double> preds{0.1, 0.4, 0.9, 0.7}, targets{0.2, 0.8};
  double brute = 0.0;
  for (int b = 0; b < 2; ++b)
    for (int t = 0; t < 2; ++t) brute += std::abs(preds[b * 2 + t] - targets[b]);
  brute /= 4.0;
  const auto l = dot_loss(preds, targets);
  EXPECT_NEAR(l.value, brute, 1e-15);
  EXPECT_EQ(l.grad, (std::vector<double>{-0.25, 0.25, 0.25, -0.25}));
}

TEST(DotLoss, RejectsBadInput) {
  const std::vector<double> p{0.1, 0.2, 0.3}, t{0.5, 0.5};
  EXPECT_THROW(dot_loss(p, t), std::invalid_argument);
  const std::vector<double> p2{0.1, 0.2}, bad{1.5};
  EXPECT_THROW(dot_loss(p2, bad), std::invalid_argument);
  const std::vector<double> empty;
  EXPECT_THROW(dot_loss(empty, empty), std::invalid_argument);
}

TEST(DoTNet, OutputsStayInUnitIntervalAndIgnorePatchOrder) {
  Rng rng(1);
  DoTNet model(small_config(), rng);
  const Image lr = random_image(40, 40, rng);
  auto patches = sample_patches(lr, model.config(), rng);
  ASSERT_EQ(patches.size(), 4u);
  EXPECT_EQ(patches[0].height, 16);
  const double fwd = predict_patches(model, patches);
  EXPECT_GE(fwd, 0.0);
  EXPECT_LE(fwd, 1.0);
  std::reverse(patches.begin(), patches.end());
  EXPECT_NEAR(predict_patches(model, patches), fwd, 1e-15);
  Rng a(5), b(5);
  EXPECT_EQ(dot_estimate(lr, model, a).value(), dot_estimate(lr, model, b).value());
}

TEST(DoTNet, PatchPreconditions) {
  Rng rng(2);
  DoTNetConfig c = small_config();
  c.patch_size = 18;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  EXPECT_THROW(c.validate_for(degradation::default_setup(degradation::Family::Convolutive, 2)), std::invalid_argument);
  EXPECT_NO_THROW(c.validate_for(degradation::default_setup(degradation::Family::Additive, 2)));
  DoTNet model(c, rng);
  EXPECT_THROW(sample_patches(random_image(12, 40, rng), c, rng), std::invalid_argument);
}

TEST(DoTNet, GradCheck) {
  Rng rng(3);
  DoTNet model(small_config(), rng);
  nn::Tensor x({2, 3, 16, 16});
  for (auto& v : x.data) v = rng.uniform();
  const auto r = nn::grad_check(model, x);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(DoTNet, LearnsNoiseLevel) {
  Rng rng(4);
  const auto scenes = harness::synthesize_scenes(6, 64, 64, rng);
  const auto setup = degradation::default_setup(degradation::Family::Additive, 2);
  DoTNet model(small_config(), rng);
  Rng vrng(7);
  const auto val = make_validation_set(scenes, setup, 2, 24, vrng);
  const double before = validation_mae(model, val, 11);
  DoTTrainSettings s;
  s.steps = 1000;
  s.batch = 4;
  s.lr_size = 24;
  s.adam.lr = 3e-3;
  s.eval_every = 250;
  const auto result = train_dotnet(model, scenes, val, setup, s, rng);
  ASSERT_EQ(result.history.size(), 4u);
  for (const auto& rec : result.history) {
    EXPECT_TRUE(std::isfinite(rec.loss));
    EXPECT_TRUE(std::isfinite(rec.val_mae));
  }
  EXPECT_LT(result.history.back().val_mae, 0.5 * before);
  EXPECT_LT(result.history.back().val_mae, 0.15);
}

TEST(DoTNet, KeepsLowestValidationCheckpoint) {
  Rng data(12);
  const auto scenes = harness::synthesize_scenes(3, 48, 48, data);
  const auto setup = degradation::default_setup(degradation::Family::Additive, 2);
  Rng vrng(13);
  const auto val = make_validation_set(scenes, setup, 2, 24, vrng);
  DoTTrainSettings s;
  s.steps = 60;
  s.lr_size = 24;
  s.adam.lr = 3e-3;
  s.eval_every = 10;
  for (bool keep : {true, false}) {
    s.keep_best = keep;
    Rng rng(14);
    DoTNet model(small_config(), rng);
    const auto result = train_dotnet(model, scenes, val, setup, s, rng);
    ASSERT_EQ(result.history.size(), 6u);
    auto best = result.history.front();
    for (const auto& rec : result.history)
      if (rec.val_mae < best.val_mae) best = rec;
    const int expected = keep ? best.step : s.steps;
    EXPECT_EQ(result.best_step, expected);
    EXPECT_EQ(result.checkpoint.step, static_cast<std::uint64_t>(expected));
  }
}

TEST(DoTNet, TrainingRejectsEmptyData) {
  Rng rng(8);
  DoTNet model(small_config(), rng);
  const std::vector<Image> none;
  const std::vector<ValidationSample> no_val;
  EXPECT_THROW(train_dotnet(model, none, no_val, degradation::default_setup(degradation::Family::Additive, 2), {}, rng),
               DataError);
}

TEST(DoTNet, CheckpointRoundTrip) {
  Rng rng(9);
  DoTNet model(small_config(), rng);
  auto setup = degradation::default_setup(degradation::Family::Additive, 4);
  setup.bounds.max = 25.0;
  const auto path = std::filesystem::temp_directory_path() / "tlsr_dotnet_roundtrip.ckpt";
  save_dotnet(path, model, setup, 12);
  auto loaded = load_dotnet(path);
  EXPECT_EQ(loaded.setup.scale, 4);
  EXPECT_EQ(loaded.setup.bounds.max, 25.0);
  EXPECT_EQ(loaded.model->config().patch_size, 16);
  const Image lr = random_image(32, 32, rng);
  Rng a(3), b(3);
  EXPECT_EQ(dot_estimate(lr, model, a).value(), dot_estimate(lr, *loaded.model, b).value());
  auto ck = to_checkpoint(model, setup);
  ck.meta["kind"] = "tlsr";
  EXPECT_THROW(from_checkpoint(ck), DataError);
  std::filesystem::remove(path);
}
