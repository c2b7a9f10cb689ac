#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tlsr/config.hpp"
#include "tlsr/dataset.hpp"
#include "tlsr/degradation.hpp"
#include "tlsr/dotnet.hpp"
#include "tlsr/sr_model.hpp"

namespace tlsr::harness {

using degradation::Family;
using degradation::FamilySetup;

/// How the SR output of an evaluation run is produced.
///   bicubic: plain bicubic upscaling of the LR input
///   blind:   tau estimated by the DoT network, then one SR pass
///   oracle:  SR driven by the ground-truth tau of the level
///   fixed:   SR driven by a constant tau (single-primary baselines)
enum class EvalMethod { Bicubic, Blind, Oracle, Fixed };

std::string to_string(EvalMethod m);
EvalMethod parse_eval_method(const std::string& s);

struct EvalSettings {
  EvalMethod method = EvalMethod::Blind;
  double fixed_tau = 0.0;
  FamilySetup setup;
  std::vector<double> levels;  // empty: default grid of the family
  int border = -1;             // pixels shaved before metrics; -1 means the scale
  std::uint64_t seed = 0;
};

/// Discrete evaluation grid of a family at a given scale.
std::vector<double> default_levels(Family family, int scale);

struct MetricRow {
  std::string image_id;
  double level = 0.0;
  double tau_true = 0.0;
  double tau_used = 0.0;  // NaN for bicubic
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct LevelSummary {
  double level = 0.0;
  double tau = 0.0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double mean_tau_used = 0.0;
  int count = 0;
};

struct ExperimentReport {
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::vector<MetricRow> rows;      // image-major, level-minor
  std::vector<LevelSummary> levels;  // in grid order
  double mean_psnr = 0.0;            // mean over levels of the level means
  double mean_ssim = 0.0;
  std::map<std::string, double> timings;  // seconds per phase
};

/// LR inputs are degraded with a noise stream keyed on (seed, image, level)
/// and stored as 8-bit; SR outputs are 8-bit quantized before luminance
/// PSNR/SSIM.
ExperimentReport evaluate(const Dataset& data, const EvalSettings& settings, sr::TLSRNet* model = nullptr,
                          dotnet::LoadedDoTNet* dot = nullptr);

/// Recomputes level means and overall means from the rows.
void aggregate(ExperimentReport& report);
bool totals_consistent(const ExperimentReport& report, double tolerance = 1e-9);

/// `family=<name>;scale=<s>;level=<v>;tau=<t>` (no commas, so it is one CSV field).
std::string degradation_params(Family family, int scale, double level, double tau);
std::map<std::string, std::string> parse_degradation_params(const std::string& field);

/// Columns: image_id,degradation_params,psnr_db,ssim
std::string metrics_csv(const ExperimentReport& report);
/// Columns: level,tau,mean_psnr_db,mean_ssim,mean_tau_used,count plus an `overall` row.
std::string summary_csv(const ExperimentReport& report);

struct CsvMetric {
  std::string image_id;
  std::map<std::string, std::string> params;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

std::vector<CsvMetric> read_metrics_csv(const std::filesystem::path& path);

/// Family recipe from the `family`, `scale`, `bounds.*`, `kernel_size`,
/// `fixed_sigma`, `sigma_u` and `sigma_v` keys.
FamilySetup setup_from_config(const Config& cfg);
sr::TLSRConfig tlsr_config_from(const Config& cfg);
dotnet::DoTNetConfig dotnet_config_from(const Config& cfg);
dotnet::DoTTrainSettings dot_train_settings_from(const Config& cfg);

/// `<prefix>.dir` points at PNGs; otherwise `<prefix>.synthetic` scenes of
/// `<prefix>.size` pixels are generated from `<prefix>.seed`.
Dataset dataset_from_config(const Config& cfg, const std::string& prefix, int scale);

/// `eval` subcommand: loads data and checkpoints named in the config, runs
/// the grid and writes metrics.csv, summary.csv, timings.txt, config.txt and
/// psnr.svg into `out`.
ExperimentReport run_experiment(const Config& cfg, const std::filesystem::path& out);

struct TrainSummary {
  std::map<std::string, double> timings;
  std::filesystem::path checkpoint;
  std::filesystem::path history_csv;
};

/// `train-tlsr`: writes tlsr.ckpt and loss.csv into `out`.
TrainSummary train_tlsr_experiment(const Config& cfg, const std::filesystem::path& out);
/// `train-dot`: writes dotnet.ckpt and mae.csv into `out`.
TrainSummary train_dot_experiment(const Config& cfg, const std::filesystem::path& out);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace tlsr::harness
