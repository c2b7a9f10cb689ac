// tlsr: degradation synthesis, training, evaluation and blind inference.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tlsr/config.hpp"
#include "tlsr/dataset.hpp"
#include "tlsr/degradation.hpp"
#include "tlsr/errors.hpp"
#include "tlsr/experiment.hpp"
#include "tlsr/kernel.hpp"
#include "tlsr/png_io.hpp"
#include "tlsr/report.hpp"
#include "tlsr/sr_model.hpp"

namespace fs = std::filesystem;
using namespace tlsr;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string family;
  std::optional<int> scale;
  std::optional<double> sigma;
  std::optional<double> noise;
};

void add_common(CLI::App* app, Common& c, bool with_config) {
  if (with_config) app->add_option("--config", c.config, "flat key = value config file")->required();
  app->add_option("--seed", c.seed, "root seed (overrides the config)");
  app->add_option("--out", c.out, "output directory")->required();
}

void add_family(CLI::App* app, Common& c) {
  app->add_option("--family", c.family, "noise | blur | angle");
  app->add_option("--scale", c.scale, "SR scale factor");
}

harness::Config load_config(const Common& c) {
  harness::Config cfg = harness::Config::load(c.config);
  if (c.seed) cfg.set("seed", std::to_string(*c.seed));
  if (!c.family.empty()) cfg.set("family", c.family);
  if (c.scale) cfg.set("scale", std::to_string(*c.scale));
  return cfg;
}

std::vector<fs::path> png_inputs(const fs::path& in) {
  if (fs::is_directory(in)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(in))
      if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no PNG files in " + in.string());
    return files;
  }
  if (!fs::exists(in)) throw DataError("input not found: " + in.string());
  return {in};
}

int run_degrade(const Common& c, const std::string& in, double theta, int kernel_size) {
  using namespace degradation;
  const Family family = parse_family(c.family.empty() ? "noise" : c.family);
  const int scale = c.scale.value_or(2);
  DegradationSpec spec;
  spec.scale = scale;
  spec.family = family;
  spec.bounds = default_setup(family, scale).bounds;
  spec.noise_level = c.noise.value_or(0.0);
  const double sigma = c.sigma.value_or(0.0);
  if (family == Family::AnisotropicAngle)
    spec.kernel = anisotropic_kernel(default_setup(family, scale).sigma_u, default_setup(family, scale).sigma_v, theta,
                                     kernel_size);
  else
    spec.kernel = sigma > 0.0 ? gaussian_kernel(sigma, kernel_size) : delta_kernel(kernel_size);
  if (family == Family::Additive) spec.bounds.min = std::min(spec.bounds.min, spec.noise_level);
  if (family == Family::Additive) spec.bounds.max = std::max(spec.bounds.max, spec.noise_level);
  if (family == Family::Convolutive) {
    spec.bounds.min = std::min(spec.bounds.min, sigma);
    spec.bounds.max = std::max(spec.bounds.max, sigma);
  }
  spec.validate();

  fs::create_directories(c.out);
  std::ofstream kf(fs::path(c.out) / "kernel.txt");
  write_kernel_text(kf, spec.kernel);
  const Rng root(c.seed.value_or(0));
  std::uint64_t index = 0;
  for (const auto& f : png_inputs(in)) {
    Rng rng = root.child(index++);
    const auto hr = imaging::crop_to_multiple(imaging::read_png(f), scale);
    const auto lr = degrade(hr, spec, rng);
    imaging::write_png(fs::path(c.out) / f.filename(), lr);
    std::printf("%s -> %s (tau %.6f)\n", f.filename().string().c_str(), (fs::path(c.out) / f.filename()).c_str(),
                dot_ground_truth(spec).value());
  }
  return kOk;
}

int run_verify_prop1(const Common& c, double tolerance) {
  using namespace degradation;
  const std::vector<std::pair<double, double>> pairs = {{0.2, 2.0}, {0.5, 4.0}, {1.0, 3.0}};
  std::string csv = "sigma0,sigma1,tau,sigma_tau,max_abs_deviation\n";
  double worst = 0.0;
  for (const auto& [s0, s1] : pairs)
    for (int i = 0; i <= 10; ++i) {
      const double tau = i / 10.0;
      const Kernel mixed = transition_kernel(s0, s1, tau, kDefaultKernelSize);
      const double st = (1.0 - tau) * s0 + tau * s1;
      const Kernel direct = gaussian_kernel(st, kDefaultKernelSize);
      const double dev = max_abs_diff(mixed, direct);
      worst = std::max(worst, dev);
      char row[160];
      std::snprintf(row, sizeof row, "%.6g,%.6g,%.6g,%.17g,%.6e\n", s0, s1, tau, st, dev);
      csv += row;
    }
  std::fputs(csv.c_str(), stdout);
  if (!c.out.empty()) harness::write_text_file(fs::path(c.out) / "prop1.csv", csv);
  std::fprintf(stderr, "max deviation %.3e (%s)\n", worst, worst < tolerance ? "ok" : "FAILED");
  return worst < tolerance ? kOk : kNumerical;
}

int run_sr(const std::string& sr_ckpt, const std::string& dot_ckpt, const std::string& in, const std::string& out,
           std::optional<double> tau, std::uint64_t seed) {
  auto model = sr::load_blind_model(sr_ckpt, dot_ckpt);
  const auto lr = imaging::read_png(in);
  if (lr.channels != 3) throw DataError(in + ": expected an RGB image");
  Rng crop(seed);
  sr::InferResult res;
  if (tau) {
    res.tau = *tau;
    res.image = sr::tlsr_apply(*model.sr, lr, *tau);
  } else {
    res = sr::tlsr_infer(lr, *model.sr, model.dot, crop);
  }
  for (double v : res.image.data)
    if (!std::isfinite(v)) throw NumericalError("non-finite SR output");
  imaging::write_png(out, res.image);
  std::printf("tau %.6f\n", res.tau);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transitional learning for blind super-resolution"};
  app.require_subcommand(1);

  Common degrade_opts;
  std::string degrade_in;
  double theta = 0.0;
  int kernel_size = degradation::kDefaultKernelSize;
  auto* degrade = app.add_subcommand("degrade", "apply one degradation to a PNG or a directory of PNGs");
  degrade->add_option("--in", degrade_in, "input PNG or directory")->required();
  add_common(degrade, degrade_opts, false);
  add_family(degrade, degrade_opts);
  degrade->add_option("--sigma", degrade_opts.sigma, "isotropic blur sigma in HR pixels (0: no blur)");
  degrade->add_option("--noise", degrade_opts.noise, "noise std-dev in 8-bit units");
  degrade->add_option("--theta", theta, "kernel angle for the angle family (radians)");
  degrade->add_option("--kernel-size", kernel_size, "odd kernel width");

  Common prop_opts;
  double prop_tol = 1e-6;
  auto* prop = app.add_subcommand("verify-prop1", "compare mixed Gaussian kernels against the direct kernel");
  prop->add_option("--out", prop_opts.out, "directory for prop1.csv");
  prop->add_option("--tolerance", prop_tol, "maximum allowed deviation");

  Common dot_opts;
  auto* train_dot = app.add_subcommand("train-dot", "train a DoT estimator");
  add_common(train_dot, dot_opts, true);
  add_family(train_dot, dot_opts);

  Common tlsr_opts;
  auto* train_tlsr = app.add_subcommand("train-tlsr", "train a transitional SR network");
  add_common(train_tlsr, tlsr_opts, true);
  add_family(train_tlsr, tlsr_opts);

  Common eval_opts;
  auto* eval = app.add_subcommand("eval", "evaluate on the discrete level grid");
  add_common(eval, eval_opts, true);
  add_family(eval, eval_opts);

  std::string sr_ckpt, dot_ckpt, sr_in, sr_out;
  std::optional<double> sr_tau;
  std::uint64_t sr_seed = 0;
  auto* srcmd = app.add_subcommand("sr", "blind single-image super-resolution");
  srcmd->add_option("--sr-checkpoint", sr_ckpt)->required();
  srcmd->add_option("--dot-checkpoint", dot_ckpt)->required();
  srcmd->add_option("--in", sr_in)->required();
  srcmd->add_option("--out", sr_out, "output PNG")->required();
  srcmd->add_option("--tau", sr_tau, "skip estimation and use this DoT");
  srcmd->add_option("--seed", sr_seed, "patch sampling seed");

  std::string n_sr, n_dot, b_sr, b_dot, real_in, real_out;
  std::uint64_t real_seed = 0;
  auto* real = app.add_subcommand("sr-real", "denoise at x1, then deblur and upscale");
  real->add_option("--denoise-sr", n_sr)->required();
  real->add_option("--denoise-dot", n_dot)->required();
  real->add_option("--deblur-sr", b_sr)->required();
  real->add_option("--deblur-dot", b_dot)->required();
  real->add_option("--in", real_in)->required();
  real->add_option("--out", real_out, "output PNG")->required();
  real->add_option("--seed", real_seed, "patch sampling seed");

  std::vector<std::string> report_inputs;
  std::string report_out, report_title = "PSNR per degradation level";
  auto* report = app.add_subcommand("report", "plot metrics CSVs as PSNR-vs-level curves");
  report->add_option("csv", report_inputs, "metrics.csv files")->required();
  report->add_option("--out", report_out, "output SVG")->required();
  report->add_option("--title", report_title);

  int synth_count = 20, synth_size = 96;
  std::uint64_t synth_seed = 1;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "write procedural PNG scenes");
  synth->add_option("--count", synth_count);
  synth->add_option("--size", synth_size);
  synth->add_option("--seed", synth_seed);
  synth->add_option("--out", synth_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (degrade->parsed()) return run_degrade(degrade_opts, degrade_in, theta, kernel_size);
    if (prop->parsed()) return run_verify_prop1(prop_opts, prop_tol);
    if (train_dot->parsed()) {
      auto cfg = load_config(dot_opts);
      const auto s = harness::train_dot_experiment(cfg, dot_opts.out);
      std::printf("wrote %s and %s (%.1fs)\n", s.checkpoint.c_str(), s.history_csv.c_str(), s.timings.at("train"));
      return kOk;
    }
    if (train_tlsr->parsed()) {
      auto cfg = load_config(tlsr_opts);
      const auto s = harness::train_tlsr_experiment(cfg, tlsr_opts.out);
      std::printf("wrote %s and %s (%.1fs)\n", s.checkpoint.c_str(), s.history_csv.c_str(), s.timings.at("train"));
      return kOk;
    }
    if (eval->parsed()) {
      auto cfg = load_config(eval_opts);
      const auto r = harness::run_experiment(cfg, eval_opts.out);
      std::fputs(harness::summary_csv(r).c_str(), stdout);
      return kOk;
    }
    if (srcmd->parsed()) return run_sr(sr_ckpt, dot_ckpt, sr_in, sr_out, sr_tau, sr_seed);
    if (real->parsed()) {
      auto denoise = sr::load_blind_model(n_sr, n_dot);
      auto deblur = sr::load_blind_model(b_sr, b_dot);
      Rng crop(real_seed);
      const auto res = sr::tlsr_real(imaging::read_png(real_in), denoise, deblur, crop);
      for (double v : res.output.data)
        if (!std::isfinite(v)) throw NumericalError("non-finite SR output");
      imaging::write_png(real_out, res.output);
      std::printf("tau_noise %.6f tau_blur %.6f\n", res.tau_noise, res.tau_blur);
      return kOk;
    }
    if (report->parsed()) {
      std::vector<harness::Series> series;
      for (const auto& f : report_inputs) series.push_back(harness::psnr_series_from_csv(f));
      harness::write_text_file(report_out, harness::svg_line_plot(series, {report_title, "level", "PSNR (dB)"}));
      return kOk;
    }
    if (synth->parsed()) {
      Rng rng(synth_seed);
      const auto scenes = harness::synthesize_scenes(synth_count, synth_size, synth_size, rng);
      fs::create_directories(synth_out);
      for (std::size_t i = 0; i < scenes.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "scene_%03zu.png", i);
        imaging::write_png(fs::path(synth_out) / name, scenes[i]);
      }
      return kOk;
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kData;
  }
  return kUsage;
}
