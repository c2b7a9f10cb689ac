#include "tlsr/dotnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "tlsr/batch.hpp"
#include "tlsr/errors.hpp"

namespace tlsr::dotnet {

void DoTNetConfig::validate() const {
  if (patch_count < 1) throw std::invalid_argument("DoTNetConfig: patch_count must be >= 1");
  if (patch_size < 1) throw std::invalid_argument("DoTNetConfig: patch_size must be >= 1");
  if (bottleneck_blocks < 1 || channels < 1 || bottleneck_channels < 1 || fc_hidden < 1)
    throw std::invalid_argument("DoTNetConfig: widths and block count must be >= 1");
  if (pool_stages < 0 || pool_stages > bottleneck_blocks)
    throw std::invalid_argument("DoTNetConfig: pool_stages must lie in [0, bottleneck_blocks]");
  if (patch_size % (1 << pool_stages) != 0)
    throw std::invalid_argument("DoTNetConfig: patch_size " + std::to_string(patch_size) + " not divisible by 2^" +
                                std::to_string(pool_stages));
}

void DoTNetConfig::validate_for(const FamilySetup& setup) const {
  validate();
  if (setup.family != degradation::Family::Additive && patch_size < setup.kernel_size)
    throw std::invalid_argument("DoTNetConfig: patch_size " + std::to_string(patch_size) +
                                " is smaller than the blur kernel (" + std::to_string(setup.kernel_size) + ")");
}

DoTNet::DoTNet(const DoTNetConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  net_.emplace<nn::Conv2d>("dot.head", 3, config_.channels, 3, rng);
  // Without this the pooled features are linear in the patch and blind to zero-mean noise.
  net_.emplace<nn::ReLU>();
  for (int i = 0; i < config_.bottleneck_blocks; ++i) {
    net_.emplace<nn::BottleneckBlock>("dot.block" + std::to_string(i), config_.channels, config_.bottleneck_channels,
                                      rng);
    if (i < config_.pool_stages) net_.emplace<nn::AvgPool2d>(2);
  }
  net_.emplace<nn::GlobalAvgPool>();
  net_.emplace<nn::FullyConnected>("dot.fc1", config_.channels, config_.fc_hidden, rng);
  net_.emplace<nn::ReLU>();
  net_.emplace<nn::FullyConnected>("dot.fc2", config_.fc_hidden, 1, rng);
  net_.emplace<nn::Sigmoid>();
}

Tensor DoTNet::forward(const Tensor& patches) {
  if (patches.shape.c != 3) throw std::invalid_argument("DoTNet: expected 3-channel patches");
  Tensor centred = patches;
  for (double& v : centred.data) v -= 0.5;
  return net_.forward(centred);
}

Tensor DoTNet::backward(const Tensor& grad_out) { return net_.backward(grad_out); }

void DoTNet::collect_parameters(std::vector<nn::Parameter*>& out) { net_.collect_parameters(out); }

std::vector<Image> sample_patches(const Image& lr, const DoTNetConfig& config, Rng& rng) {
  if (lr.height < config.patch_size || lr.width < config.patch_size)
    throw std::invalid_argument("dot_estimate: image " + std::to_string(lr.height) + "x" + std::to_string(lr.width) +
                                " smaller than patch size " + std::to_string(config.patch_size));
  std::vector<Image> patches;
  patches.reserve(config.patch_count);
  for (auto& [patch, box] : imaging::random_crops(lr, config.patch_count, config.patch_size, rng))
    patches.push_back(std::move(patch));
  return patches;
}

double predict_patches(DoTNet& model, std::span<const Image> patches) {
  const Tensor scores = model.forward(to_tensor(patches));
  double sum = 0.0;
  for (double s : scores.data) sum += s;
  return sum / static_cast<double>(scores.data.size());
}

DoT dot_estimate(const Image& lr, DoTNet& model, Rng& rng) {
  const auto patches = sample_patches(lr, model.config(), rng);
  return DoT(std::clamp(predict_patches(model, patches), 0.0, 1.0));
}

DotLoss dot_loss(std::span<const double> preds, std::span<const double> targets) {
  if (targets.empty() || preds.size() % targets.size() != 0)
    throw std::invalid_argument("dot_loss: " + std::to_string(preds.size()) + " predictions for " +
                                std::to_string(targets.size()) + " targets");
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  for (double v : preds)
    if (!in_unit(v)) throw std::invalid_argument("dot_loss: prediction outside [0, 1]");
  for (double v : targets)
    if (!in_unit(v)) throw std::invalid_argument("dot_loss: target outside [0, 1]");
  const std::size_t per = preds.size() / targets.size();
  const double n = static_cast<double>(preds.size());
  DotLoss loss;
  loss.grad.resize(preds.size());
  for (std::size_t b = 0; b < targets.size(); ++b)
    for (std::size_t t = 0; t < per; ++t) {
      const std::size_t i = b * per + t;
      const double d = preds[i] - targets[b];
      loss.value += std::abs(d);
      loss.grad[i] = d > 0.0 ? 1.0 / n : (d < 0.0 ? -1.0 / n : 0.0);
    }
  loss.value /= n;
  return loss;
}

std::vector<ValidationSample> make_validation_set(std::span<const Image> hr, const FamilySetup& setup, int per_image,
                                                  int lr_size, Rng& rng) {
  std::vector<ValidationSample> out;
  for (const auto& img : hr)
    for (int k = 0; k < per_image; ++k) {
      auto pair = degradation::sample_training_pair(img, setup, lr_size, rng);
      out.push_back({std::move(pair.lr), pair.tau.value()});
    }
  return out;
}

double validation_mae(DoTNet& model, std::span<const ValidationSample> samples, std::uint64_t seed) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  const Rng base(seed);
  double sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Rng crop_rng = base.child(static_cast<std::uint64_t>(i));
    sum += std::abs(dot_estimate(samples[i].lr, model, crop_rng).value() - samples[i].tau);
  }
  return sum / static_cast<double>(samples.size());
}

DoTTrainResult train_dotnet(DoTNet& model, std::span<const Image> train, std::span<const ValidationSample> val,
                            const FamilySetup& setup, const DoTTrainSettings& settings, Rng& rng) {
  if (train.empty()) throw DataError("train_dotnet: empty dataset");
  setup.validate();
  const DoTNetConfig& cfg = model.config();
  cfg.validate_for(setup);
  if (settings.lr_size < cfg.patch_size) throw std::invalid_argument("train_dotnet: lr_size smaller than patch_size");

  nn::Adam adam(model.parameters(), settings.adam);
  Rng data_rng = rng.child("dot.data");
  const std::uint64_t val_seed = rng.child("dot.val").next_u64();
  DoTTrainResult result;
  double best_mae = 0.0;
  auto snapshot = [&](int step) {
    result.checkpoint = to_checkpoint(model, setup, static_cast<std::uint64_t>(step));
    nn::export_adam(adam.params(), adam.state(), result.checkpoint);
  };
  for (int step = 1; step <= settings.steps; ++step) {
    if (settings.halving_period > 0)
      adam.set_lr(settings.adam.lr * std::pow(0.5, (step - 1) / settings.halving_period));
    std::vector<Image> patches;
    std::vector<double> targets;
    for (int b = 0; b < settings.batch; ++b) {
      const auto& hr = train[data_rng.uniform_int(0, static_cast<int>(train.size()) - 1)];
      auto pair = degradation::sample_training_pair(hr, setup, settings.lr_size, data_rng);
      for (auto& p : sample_patches(pair.lr, cfg, data_rng)) patches.push_back(std::move(p));
      targets.push_back(pair.tau.value());
    }
    adam.zero_grad();
    const Tensor preds = model.forward(to_tensor(patches));
    const DotLoss loss = dot_loss(preds.data, targets);
    if (!std::isfinite(loss.value)) throw NumericalError("train_dotnet: non-finite loss at step " + std::to_string(step));
    Tensor grad(preds.shape);
    grad.data.assign(loss.grad.begin(), loss.grad.end());
    model.backward(grad);
    adam.step();

    if (step % settings.eval_every == 0 || step == settings.steps) {
      const double mae = validation_mae(model, val, val_seed);
      result.history.push_back({step, loss.value, mae});
      if (settings.keep_best && !val.empty() && (result.best_step == 0 || mae < best_mae)) {
        best_mae = mae;
        result.best_step = step;
        snapshot(step);
      }
    }
  }
  if (result.best_step == 0) {
    result.best_step = settings.steps;
    snapshot(settings.steps);
  }
  return result;
}

nn::Checkpoint to_checkpoint(DoTNet& model, const FamilySetup& setup, std::uint64_t step) {
  nn::Checkpoint ckpt;
  ckpt.step = step;
  ckpt.meta = degradation::setup_to_meta(setup);
  ckpt.meta["kind"] = "dotnet";
  const auto& c = model.config();
  ckpt.meta["dot.patch_count"] = std::to_string(c.patch_count);
  ckpt.meta["dot.patch_size"] = std::to_string(c.patch_size);
  ckpt.meta["dot.bottleneck_blocks"] = std::to_string(c.bottleneck_blocks);
  ckpt.meta["dot.channels"] = std::to_string(c.channels);
  ckpt.meta["dot.bottleneck_channels"] = std::to_string(c.bottleneck_channels);
  ckpt.meta["dot.fc_hidden"] = std::to_string(c.fc_hidden);
  ckpt.meta["dot.pool_stages"] = std::to_string(c.pool_stages);
  nn::export_parameters(model.parameters(), ckpt);
  return ckpt;
}

LoadedDoTNet from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.meta_or("kind", "") != "dotnet") throw DataError("checkpoint does not hold a DoT network");
  auto get = [&](const std::string& key) {
    const std::string v = ckpt.meta_or(key, "");
    try {
      return std::stoi(v);
    } catch (const std::logic_error&) {
      throw DataError("checkpoint: bad or missing '" + key + "'");
    }
  };
  DoTNetConfig c;
  c.patch_count = get("dot.patch_count");
  c.patch_size = get("dot.patch_size");
  c.bottleneck_blocks = get("dot.bottleneck_blocks");
  c.channels = get("dot.channels");
  c.bottleneck_channels = get("dot.bottleneck_channels");
  c.fc_hidden = get("dot.fc_hidden");
  c.pool_stages = get("dot.pool_stages");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  LoadedDoTNet out;
  out.setup = degradation::setup_from_meta(ckpt.meta);
  Rng init(0);
  out.model = std::make_unique<DoTNet>(c, init);
  nn::import_parameters(out.model->parameters(), ckpt);
  return out;
}

void save_dotnet(const std::filesystem::path& path, DoTNet& model, const FamilySetup& setup, std::uint64_t step) {
  nn::save_checkpoint(path, to_checkpoint(model, setup, step));
}

LoadedDoTNet load_dotnet(const std::filesystem::path& path) { return from_checkpoint(nn::load_checkpoint(path)); }

}  // namespace tlsr::dotnet
