#include "tlsr/sr_model.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "tlsr/batch.hpp"
#include "tlsr/errors.hpp"
#include "tlsr/nn/adam.hpp"

namespace tlsr::sr {

namespace {

int upsample_stages(int scale) {
  int stages = 0;
  for (int s = scale; s > 1; s /= 2) {
    if (s % 2 != 0) throw std::invalid_argument("TLSR: scale must be a power of two, got " + std::to_string(scale));
    ++stages;
  }
  return stages;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void shift_channels(Tensor& t, const imaging::Rgb& mean, double sign) {
  const std::size_t plane = t.shape.plane();
  for (int b = 0; b < t.shape.n; ++b)
    for (int c = 0; c < t.shape.c; ++c) {
      double* p = t.sample(b) + c * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] += sign * mean[c];
    }
}

}  // namespace

std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::Transitional: return "transitional";
    case TrainMode::BaselineWeak: return "baseline-weak";
    case TrainMode::BaselineStrong: return "baseline-strong";
  }
  return "?";
}

TrainMode parse_train_mode(const std::string& s) {
  if (s == "transitional" || s == "tlsr") return TrainMode::Transitional;
  if (s == "baseline-weak" || s == "d0") return TrainMode::BaselineWeak;
  if (s == "baseline-strong" || s == "d1") return TrainMode::BaselineStrong;
  throw std::invalid_argument("unknown training mode '" + s + "'");
}

void TLSRConfig::validate() const {
  if (trunk_blocks < 1 || channels < 1 || transitional_blocks < 1 || scale < 1)
    throw std::invalid_argument("TLSRConfig: n, c, m and scale must all be >= 1");
  upsample_stages(scale);
  if (family.scale != scale)
    throw std::invalid_argument("TLSRConfig: family scale " + std::to_string(family.scale) +
                                " differs from network scale " + std::to_string(scale));
  family.validate();
  if (batch < 1 || patch < 1 || steps < 0 || lr <= 0.0 || halving_period < 0 || log_every < 1)
    throw std::invalid_argument("TLSRConfig: invalid training schedule");
}

TLSRNet::TLSRNet(const TLSRConfig& config, const imaging::Rgb& mean, Rng& rng)
    : config_(config),
      mean_(mean),
      head_("head", 3, config.channels, 3, rng),
      stack_("trans", config.transitional_blocks, config.channels, rng),
      tail_("tail", config.channels, 3, 3, rng) {
  config_.validate();
  for (int i = 0; i < config_.trunk_blocks; ++i)
    trunk_.emplace<nn::ResidualBlock>("trunk." + std::to_string(i), config_.channels, rng);
  const int stages = upsample_stages(config_.scale);
  for (int i = 0; i < stages; ++i) {
    upsampler_.emplace<nn::Conv2d>("up." + std::to_string(i), config_.channels, 4 * config_.channels, 3, rng);
    upsampler_.emplace<nn::PixelShuffle>(2);
  }
}

Tensor TLSRNet::forward(const Tensor& x, std::span<const double> taus) {
  if (x.shape.c != 3) throw std::invalid_argument("TLSR: expected 3-channel input");
  if (taus.size() != static_cast<std::size_t>(x.shape.n))
    throw std::invalid_argument("TLSR: " + std::to_string(taus.size()) + " taus for batch of " +
                                std::to_string(x.shape.n));
  Tensor shifted = x;
  shift_channels(shifted, mean_, -1.0);
  const Tensor h = head_.forward(shifted);
  stack_.set_taus(taus);
  Tensor body = stack_.forward(trunk_.forward(h));
  nn::add_inplace(body, h);
  Tensor y = tail_.forward(upsampler_.forward(body));
  shift_channels(y, mean_, 1.0);
  return y;
}

Tensor TLSRNet::backward(const Tensor& grad_out) {
  const Tensor g_body = upsampler_.backward(tail_.backward(grad_out));
  Tensor g_h = trunk_.backward(stack_.backward(g_body));
  nn::add_inplace(g_h, g_body);
  return head_.backward(g_h);
}

Tensor TLSRNet::forward_plain(const Tensor& x, double tau) {
  degradation::DoT checked(tau);
  Tensor shifted = x;
  shift_channels(shifted, mean_, -1.0);
  const Tensor h = head_.forward(shifted);
  Tensor body = trunk_.forward(h);
  Rng unused(0);
  for (std::size_t i = 0; i < stack_.size(); ++i) {
    nn::ResidualBlock plain("plain", config_.channels, unused);
    stack_.block(i).export_to(plain, checked.value());
    body = plain.forward(body);
  }
  nn::add_inplace(body, h);
  Tensor y = tail_.forward(upsampler_.forward(body));
  shift_channels(y, mean_, 1.0);
  return y;
}

std::vector<nn::Parameter*> TLSRNet::parameters() {
  std::vector<nn::Parameter*> out;
  head_.collect_parameters(out);
  trunk_.collect_parameters(out);
  stack_.collect_parameters(out);
  upsampler_.collect_parameters(out);
  tail_.collect_parameters(out);
  return out;
}

void TLSRNet::zero_grad() {
  for (auto* p : parameters()) p->grad.fill(0.0);
}

TLSRTrainResult tlsr_train(TLSRNet& model, std::span<const Image> train, Rng& rng, dotnet::DoTNet* dot_model) {
  const TLSRConfig& cfg = model.config();
  if (train.empty()) throw DataError("tlsr_train: empty dataset");
  if (!(cfg.family.bounds.max > cfg.family.bounds.min))
    throw std::invalid_argument("tlsr_train: family bounds must satisfy max > min");
  const bool joint = cfg.joint_dot && cfg.mode == TrainMode::Transitional;
  if (joint && dot_model == nullptr) throw std::invalid_argument("tlsr_train: joint mode needs a DoT network");
  if (joint) dot_model->config().validate_for(cfg.family);
  if (joint && cfg.patch < dot_model->config().patch_size)
    throw std::invalid_argument("tlsr_train: patch smaller than the DoT patch size");

  std::vector<nn::Parameter*> params = model.parameters();
  if (joint)
    for (auto* p : dot_model->parameters()) params.push_back(p);
  nn::Adam adam(params, nn::AdamSettings{cfg.lr});
  Rng data_rng = rng.child("tlsr.data");

  std::optional<double> pinned;
  if (cfg.mode == TrainMode::BaselineWeak) pinned = 0.0;
  if (cfg.mode == TrainMode::BaselineStrong) pinned = 1.0;

  TLSRTrainResult result;
  double running = 0.0;
  int in_window = 0;
  for (int step = 1; step <= cfg.steps; ++step) {
    const double lr = cfg.halving_period > 0 ? cfg.lr * std::pow(0.5, (step - 1) / cfg.halving_period) : cfg.lr;
    adam.set_lr(lr);
    std::vector<Image> lr_batch, hr_batch;
    std::vector<double> taus;
    for (int b = 0; b < cfg.batch; ++b) {
      const auto& hr = train[data_rng.uniform_int(0, static_cast<int>(train.size()) - 1)];
      auto pair = degradation::sample_training_pair(hr, cfg.family, cfg.patch, data_rng, pinned);
      lr_batch.push_back(std::move(pair.lr));
      hr_batch.push_back(std::move(pair.hr));
      taus.push_back(pair.tau.value());
    }
    adam.zero_grad();
    const Tensor x = to_tensor(lr_batch);

    Tensor dot_preds;
    std::vector<double> drive = taus;
    const int patches_per = joint ? dot_model->config().patch_count : 0;
    if (joint) {
      std::vector<Image> patches;
      for (const auto& img : lr_batch)
        for (auto& p : dotnet::sample_patches(img, dot_model->config(), data_rng)) patches.push_back(std::move(p));
      dot_preds = dot_model->forward(to_tensor(patches));
      for (int b = 0; b < cfg.batch; ++b) {
        double s = 0.0;
        for (int t = 0; t < patches_per; ++t) s += dot_preds.data[b * patches_per + t];
        drive[b] = s / patches_per;
      }
    }

    const Tensor y = model.forward(x, drive);
    const nn::Loss loss = nn::l1_loss(y, to_tensor(hr_batch));
    if (!std::isfinite(loss.value)) throw NumericalError("tlsr_train: non-finite loss at step " + std::to_string(step));
    model.backward(loss.grad);

    double total = loss.value;
    if (joint) {
      const auto tau_grad = model.tau_grad();
      const auto dl = dotnet::dot_loss(dot_preds.data, taus);
      Tensor g(dot_preds.shape);
      for (int b = 0; b < cfg.batch; ++b)
        for (int t = 0; t < patches_per; ++t) {
          const int i = b * patches_per + t;
          g.data[i] = tau_grad[b] / patches_per + cfg.dot_weight * dl.grad[i];
        }
      dot_model->backward(g);
      total += cfg.dot_weight * dl.value;
    }
    adam.step();

    running += total;
    ++in_window;
    if (step % cfg.log_every == 0 || step == cfg.steps) {
      result.history.push_back({step, running / in_window, lr});
      running = 0.0;
      in_window = 0;
    }
  }
  result.checkpoint = to_checkpoint(model, static_cast<std::uint64_t>(cfg.steps));
  nn::export_adam(adam.params(), adam.state(), result.checkpoint);
  return result;
}

Image tlsr_apply(TLSRNet& model, const Image& lr, double tau) {
  const double taus[1] = {degradation::DoT(tau).value()};
  return from_tensor(model.forward(to_tensor(lr), taus), 0);
}

namespace {

void check_pair(const TLSRNet& model, const dotnet::LoadedDoTNet& dot) {
  const auto& a = model.config().family;
  const auto& b = dot.setup;
  if (a.family != b.family || a.scale != b.scale || a.bounds.min != b.bounds.min || a.bounds.max != b.bounds.max)
    throw DataError("SR network (" + degradation::to_string(a.family) + ", x" + std::to_string(a.scale) +
                    ") and DoT network (" + degradation::to_string(b.family) + ", x" + std::to_string(b.scale) +
                    ") were trained for different degradations");
}

}  // namespace

InferResult tlsr_infer(const Image& lr, TLSRNet& model, dotnet::LoadedDoTNet& dot, Rng& crop_rng) {
  check_pair(model, dot);
  InferResult out;
  out.tau = dotnet::dot_estimate(lr, *dot.model, crop_rng).value();
  out.image = tlsr_apply(model, lr, out.tau);
  return out;
}

RealResult tlsr_real(const Image& lr, BlindModel& denoise, BlindModel& deblur, Rng& crop_rng) {
  if (!denoise.sr || !deblur.sr || !denoise.dot.model || !deblur.dot.model)
    throw std::invalid_argument("tlsr_real: missing model");
  if (denoise.sr->config().scale != 1) throw std::invalid_argument("tlsr_real: the denoising stage must run at x1");
  if (denoise.sr->config().family.family != degradation::Family::Additive)
    throw std::invalid_argument("tlsr_real: the denoising stage must be trained on the additive family");
  if (deblur.sr->config().family.family == degradation::Family::Additive)
    throw std::invalid_argument("tlsr_real: the second stage must be trained on a blur family");
  RealResult out;
  Rng first = crop_rng.child("real.noise");
  Rng second = crop_rng.child("real.blur");
  auto stage1 = tlsr_infer(lr, *denoise.sr, denoise.dot, first);
  auto stage2 = tlsr_infer(stage1.image, *deblur.sr, deblur.dot, second);
  out.denoised = std::move(stage1.image);
  out.tau_noise = stage1.tau;
  out.output = std::move(stage2.image);
  out.tau_blur = stage2.tau;
  return out;
}

nn::Checkpoint to_checkpoint(TLSRNet& model, std::uint64_t step) {
  const auto& c = model.config();
  nn::Checkpoint ckpt;
  ckpt.step = step;
  ckpt.meta = degradation::setup_to_meta(c.family);
  ckpt.meta["kind"] = "tlsr";
  ckpt.meta["tlsr.trunk_blocks"] = std::to_string(c.trunk_blocks);
  ckpt.meta["tlsr.channels"] = std::to_string(c.channels);
  ckpt.meta["tlsr.transitional_blocks"] = std::to_string(c.transitional_blocks);
  ckpt.meta["tlsr.mode"] = to_string(c.mode);
  for (int i = 0; i < 3; ++i) ckpt.meta["tlsr.mean." + std::to_string(i)] = format_double(model.mean()[i]);
  nn::export_parameters(model.parameters(), ckpt);
  return ckpt;
}

std::unique_ptr<TLSRNet> from_checkpoint(const nn::Checkpoint& ckpt) {
  if (ckpt.meta_or("kind", "") != "tlsr") throw DataError("checkpoint does not hold a TLSR network");
  auto num = [&](const std::string& key) {
    try {
      return std::stod(ckpt.meta_or(key, ""));
    } catch (const std::logic_error&) {
      throw DataError("checkpoint: bad or missing '" + key + "'");
    }
  };
  TLSRConfig c;
  c.family = degradation::setup_from_meta(ckpt.meta);
  c.scale = c.family.scale;
  c.trunk_blocks = static_cast<int>(num("tlsr.trunk_blocks"));
  c.channels = static_cast<int>(num("tlsr.channels"));
  c.transitional_blocks = static_cast<int>(num("tlsr.transitional_blocks"));
  try {
    c.mode = parse_train_mode(ckpt.meta_or("tlsr.mode", "transitional"));
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  imaging::Rgb mean{};
  for (int i = 0; i < 3; ++i) mean[i] = num("tlsr.mean." + std::to_string(i));
  Rng init(0);
  auto model = std::make_unique<TLSRNet>(c, mean, init);
  auto params = model->parameters();
  nn::import_parameters(params, ckpt);
  return model;
}

void save_tlsr(const std::filesystem::path& path, TLSRNet& model, std::uint64_t step) {
  nn::save_checkpoint(path, to_checkpoint(model, step));
}

std::unique_ptr<TLSRNet> load_tlsr(const std::filesystem::path& path) {
  return from_checkpoint(nn::load_checkpoint(path));
}

BlindModel load_blind_model(const std::filesystem::path& sr_path, const std::filesystem::path& dot_path) {
  BlindModel m{load_tlsr(sr_path), dotnet::load_dotnet(dot_path)};
  check_pair(*m.sr, m.dot);
  return m;
}

}  // namespace tlsr::sr
