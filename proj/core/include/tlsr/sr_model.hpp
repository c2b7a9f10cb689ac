#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tlsr/degradation.hpp"
#include "tlsr/dotnet.hpp"
#include "tlsr/nn/checkpoint.hpp"
#include "tlsr/nn/layers.hpp"
#include "tlsr/transitional.hpp"

namespace tlsr::sr {

using degradation::FamilySetup;
using imaging::Image;
using nn::Tensor;

/// Which degradations a network is trained on and which DoT it is driven by.
/// Weak/Strong train a single primary: tau is pinned to 0 or 1 and every
/// training pair is degraded at that endpoint.
enum class TrainMode { Transitional, BaselineWeak, BaselineStrong };

std::string to_string(TrainMode m);
TrainMode parse_train_mode(const std::string& s);

struct TLSRConfig {
  int trunk_blocks = 4;
  int channels = 16;
  int transitional_blocks = 2;
  int scale = 2;
  FamilySetup family = degradation::default_setup(degradation::Family::Additive, 2);

  int batch = 8;
  int patch = 32;  // LR crop side
  double lr = 2e-4;
  int halving_period = 100000;
  int steps = 5000;
  TrainMode mode = TrainMode::Transitional;
  bool joint_dot = false;  // backpropagate the SR loss into the DoT network
  double dot_weight = 1.0;
  int log_every = 100;

  void validate() const;
};

/// Mean-shifted residual SR network whose last `transitional_blocks` blocks
/// are rebuilt per sample from tau.
///
/// head conv -> shared residual trunk -> transitional blocks -> + head output
/// -> (conv to 4c, pixel shuffle) per x2 stage -> tail conv -> + mean.
class TLSRNet {
 public:
  TLSRNet(const TLSRConfig& config, const imaging::Rgb& mean, Rng& rng);

  /// x: (B, 3, H, W) in [0, 1], one tau per sample -> (B, 3, sH, sW).
  Tensor forward(const Tensor& x, std::span<const double> taus);
  /// Gradient w.r.t. the input of the last forward; parameter gradients and
  /// the per-sample tau gradient are accumulated on the way.
  Tensor backward(const Tensor& grad_out);
  std::vector<double> tau_grad() const { return stack_.tau_grad(); }

  /// Same pipeline with every transitional block replaced by a plain residual
  /// block holding the weights interpolated at `tau`.
  Tensor forward_plain(const Tensor& x, double tau);

  std::vector<nn::Parameter*> parameters();
  void zero_grad();

  const TLSRConfig& config() const { return config_; }
  const imaging::Rgb& mean() const { return mean_; }
  transitional::TransitionalStack& stack() { return stack_; }

 private:
  Tensor upsample_forward(const Tensor& features);

  TLSRConfig config_;
  imaging::Rgb mean_;
  nn::Conv2d head_;
  nn::Sequential trunk_;
  transitional::TransitionalStack stack_;
  nn::Sequential upsampler_;
  nn::Conv2d tail_;
};

struct TrainRecord {
  int step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct TLSRTrainResult {
  std::vector<TrainRecord> history;  // running mean loss per log interval
  nn::Checkpoint checkpoint;
};

/// L1 training on freshly degraded random crops with dihedral augmentation
/// and step-wise lr halving. Staged mode feeds the ground-truth DoT; with
/// `config.joint_dot` the DoT network supplies tau and is updated as well.
TLSRTrainResult tlsr_train(TLSRNet& model, std::span<const Image> train, Rng& rng,
                           dotnet::DoTNet* dot_model = nullptr);

/// Runs one LR image at a given tau.
Image tlsr_apply(TLSRNet& model, const Image& lr, double tau);

struct InferResult {
  Image image;
  double tau = 0.0;
};

/// Estimates tau from random crops of `lr` and applies the network once.
InferResult tlsr_infer(const Image& lr, TLSRNet& model, dotnet::LoadedDoTNet& dot, Rng& crop_rng);

struct BlindModel {
  std::unique_ptr<TLSRNet> sr;
  dotnet::LoadedDoTNet dot;
};

struct RealResult {
  Image denoised;
  Image output;
  double tau_noise = 0.0;
  double tau_blur = 0.0;
};

/// x1 = denoiser(x, tau_n) at x1, then y = deblurrer(x1, tau_b) at xs.
RealResult tlsr_real(const Image& lr, BlindModel& denoise, BlindModel& deblur, Rng& crop_rng);

nn::Checkpoint to_checkpoint(TLSRNet& model, std::uint64_t step = 0);
std::unique_ptr<TLSRNet> from_checkpoint(const nn::Checkpoint& ckpt);
void save_tlsr(const std::filesystem::path& path, TLSRNet& model, std::uint64_t step = 0);
std::unique_ptr<TLSRNet> load_tlsr(const std::filesystem::path& path);
BlindModel load_blind_model(const std::filesystem::path& sr_path, const std::filesystem::path& dot_path);

}  // namespace tlsr::sr
