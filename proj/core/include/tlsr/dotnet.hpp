#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "tlsr/degradation.hpp"
#include "tlsr/nn/adam.hpp"
#include "tlsr/nn/checkpoint.hpp"
#include "tlsr/nn/layers.hpp"

namespace tlsr::dotnet {

using degradation::DoT;
using degradation::FamilySetup;
using imaging::Image;
using nn::Tensor;

/// Patch sampling and backbone layout of the DoT regressor.
///
/// The backbone is a 3x3 head conv and ReLU followed by `bottleneck_blocks` bottleneck
/// residual blocks; a 2x2 average pool follows each of the first
/// `pool_stages` blocks. Global average pooling feeds two fully connected
/// layers and a sigmoid.
struct DoTNetConfig {
  int patch_count = 8;
  int patch_size = 32;
  int bottleneck_blocks = 4;
  int channels = 16;
  int bottleneck_channels = 8;
  int fc_hidden = 32;
  int pool_stages = 3;

  void validate() const;
  /// Convolutive families need patches at least as wide as the blur kernel.
  void validate_for(const FamilySetup& setup) const;
};

class DoTNet : public nn::Module {
 public:
  DoTNet(const DoTNetConfig& config, Rng& rng);

  /// (N, 3, P, P) patches -> (N, 1, 1, 1) per-patch scores in (0, 1).
  Tensor forward(const Tensor& patches) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_parameters(std::vector<nn::Parameter*>& out) override;

  const DoTNetConfig& config() const { return config_; }

 private:
  DoTNetConfig config_;
  nn::Sequential net_;
};

/// T random patch_size crops of an LR image.
std::vector<Image> sample_patches(const Image& lr, const DoTNetConfig& config, Rng& rng);

/// Arithmetic mean of the per-patch scores, summed in patch order.
double predict_patches(DoTNet& model, std::span<const Image> patches);

DoT dot_estimate(const Image& lr, DoTNet& model, Rng& rng);

struct DotLoss {
  double value = 0.0;
  std::vector<double> grad;  // d value / d pred, same layout as preds
};

/// Mean |pred[b*T + t] - target[b]| over all B*T patch predictions.
DotLoss dot_loss(std::span<const double> preds, std::span<const double> targets);

struct DoTTrainSettings {
  int steps = 1000;
  int batch = 4;
  int lr_size = 48;  // LR crop the T patches are drawn from
  nn::AdamSettings adam{1e-3};
  int halving_period = 0;  // 0 disables the schedule
  int eval_every = 100;
  bool keep_best = true;  // checkpoint the lowest validation MAE rather than the last step
};

/// Held-out degraded image with its ground-truth DoT.
struct ValidationSample {
  Image lr;
  double tau = 0.0;
};

/// `per_image` draws from each HR image; the evaluation seed is fixed per sample.
std::vector<ValidationSample> make_validation_set(std::span<const Image> hr, const FamilySetup& setup, int per_image,
                                                  int lr_size, Rng& rng);

double validation_mae(DoTNet& model, std::span<const ValidationSample> samples, std::uint64_t seed);

struct MaeRecord {
  int step = 0;
  double loss = 0.0;
  double val_mae = 0.0;  // NaN when no validation set was supplied
};

struct DoTTrainResult {
  std::vector<MaeRecord> history;
  nn::Checkpoint checkpoint;
  int best_step = 0;
};

/// Optimizes the patch loss on freshly degraded crops; throws NumericalError
/// if the loss stops being finite.
DoTTrainResult train_dotnet(DoTNet& model, std::span<const Image> train, std::span<const ValidationSample> val,
                            const FamilySetup& setup, const DoTTrainSettings& settings, Rng& rng);

nn::Checkpoint to_checkpoint(DoTNet& model, const FamilySetup& setup, std::uint64_t step = 0);

struct LoadedDoTNet {
  std::unique_ptr<DoTNet> model;
  FamilySetup setup;
};

LoadedDoTNet from_checkpoint(const nn::Checkpoint& ckpt);
void save_dotnet(const std::filesystem::path& path, DoTNet& model, const FamilySetup& setup, std::uint64_t step = 0);
LoadedDoTNet load_dotnet(const std::filesystem::path& path);

}  // namespace tlsr::dotnet
