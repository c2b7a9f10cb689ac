#include "tlsr/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "tlsr/errors.hpp"
#include "tlsr/metrics.hpp"
#include "tlsr/report.hpp"

namespace tlsr::harness {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string to_string(EvalMethod m) {
  switch (m) {
    case EvalMethod::Bicubic: return "bicubic";
    case EvalMethod::Blind: return "blind";
    case EvalMethod::Oracle: return "oracle";
    case EvalMethod::Fixed: return "fixed";
  }
  return "?";
}

EvalMethod parse_eval_method(const std::string& s) {
  if (s == "bicubic") return EvalMethod::Bicubic;
  if (s == "blind" || s == "tlsr") return EvalMethod::Blind;
  if (s == "oracle") return EvalMethod::Oracle;
  if (s == "fixed") return EvalMethod::Fixed;
  throw UsageError("unknown eval method '" + s + "' (bicubic|blind|oracle|fixed)");
}

std::vector<double> default_levels(Family family, int scale) {
  switch (family) {
    case Family::Additive: return {0, 5, 10, 15, 20, 25, 30};
    case Family::Convolutive:
      return scale >= 4 ? std::vector<double>{0.2, 1.0, 2.0, 3.0, 4.0} : std::vector<double>{0.2, 0.5, 1.0, 1.5, 2.0};
    case Family::AnisotropicAngle: {
      std::vector<double> out;
      for (int i = 0; i <= 4; ++i) out.push_back(i * std::numbers::pi / 8.0);
      return out;
    }
  }
  return {};
}

std::string degradation_params(Family family, int scale, double level, double tau) {
  return "family=" + degradation::to_string(family) + ";scale=" + std::to_string(scale) + ";level=" +
         fmt("%.6g", level) + ";tau=" + fmt("%.6g", tau);
}

std::map<std::string, std::string> parse_degradation_params(const std::string& field) {
  std::map<std::string, std::string> out;
  std::stringstream ss(field);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw DataError("degradation_params: expected key=value, got '" + item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

ExperimentReport evaluate(const Dataset& data, const EvalSettings& settings, sr::TLSRNet* model,
                          dotnet::LoadedDoTNet* dot) {
  const auto start = Clock::now();
  const FamilySetup& setup = settings.setup;
  setup.validate();
  const bool needs_model = settings.method != EvalMethod::Bicubic;
  if (needs_model) {
    if (model == nullptr) throw UsageError("evaluate: method " + to_string(settings.method) + " needs an SR model");
    const auto& f = model->config().family;
    if (f.family != setup.family || f.scale != setup.scale)
      throw DataError("evaluate: SR checkpoint is for " + degradation::to_string(f.family) + " x" +
                      std::to_string(f.scale) + ", evaluation asks for " + degradation::to_string(setup.family) +
                      " x" + std::to_string(setup.scale));
  }
  if (settings.method == EvalMethod::Blind && (dot == nullptr || !dot->model))
    throw UsageError("evaluate: blind evaluation needs a DoT model");
  if (settings.method == EvalMethod::Fixed) degradation::DoT check(settings.fixed_tau);

  const auto levels = settings.levels.empty() ? default_levels(setup.family, setup.scale) : settings.levels;
  const int border = settings.border >= 0 ? settings.border : setup.scale;
  const Rng root(settings.seed);
  const Rng noise_root = root.child("eval.degrade");
  const Rng crop_root = root.child("eval.crop");

  ExperimentReport report;
  report.seed = settings.seed;
  for (std::size_t i = 0; i < data.entries.size(); ++i) {
    const auto& entry = data.entries[i];
    const Image hr = imaging::crop_to_multiple(entry.hr, setup.scale);
    for (std::size_t j = 0; j < levels.size(); ++j) {
      const auto spec = setup.at(levels[j]);
      Rng noise = noise_root.child(i).child(j);
      const Image lr = imaging::quantize_8bit(degradation::degrade(hr, spec, noise));
      MetricRow row;
      row.image_id = entry.id;
      row.level = levels[j];
      row.tau_true = degradation::dot_ground_truth(spec).value();
      row.tau_used = std::numeric_limits<double>::quiet_NaN();
      Image sr_out;
      switch (settings.method) {
        case EvalMethod::Bicubic: sr_out = imaging::bicubic_resize(lr, setup.scale); break;
        case EvalMethod::Blind: {
          Rng crop = crop_root.child(i).child(j);
          auto res = sr::tlsr_infer(lr, *model, *dot, crop);
          sr_out = std::move(res.image);
          row.tau_used = res.tau;
          break;
        }
        case EvalMethod::Oracle:
          row.tau_used = row.tau_true;
          sr_out = sr::tlsr_apply(*model, lr, row.tau_used);
          break;
        case EvalMethod::Fixed:
          row.tau_used = settings.fixed_tau;
          sr_out = sr::tlsr_apply(*model, lr, row.tau_used);
          break;
      }
      for (double v : sr_out.data)
        if (!std::isfinite(v)) throw NumericalError("evaluate: non-finite SR output for " + entry.id);
      const auto q = imaging::luminance_quality(imaging::quantize_8bit(sr_out), hr, border);
      row.psnr_db = q.psnr_db;
      row.ssim = q.ssim;
      report.rows.push_back(row);
    }
  }
  aggregate(report);
  report.config = degradation::setup_to_meta(setup);
  report.config["method"] = to_string(settings.method);
  report.config["border"] = std::to_string(border);
  report.config["seed"] = std::to_string(settings.seed);
  if (settings.method == EvalMethod::Fixed) report.config["fixed_tau"] = fmt("%.17g", settings.fixed_tau);
  report.timings["eval"] = seconds_since(start);
  return report;
}

void aggregate(ExperimentReport& report) {
  report.levels.clear();
  std::vector<double> order;
  std::map<double, LevelSummary> acc;
  for (const auto& r : report.rows) {
    auto [it, fresh] = acc.try_emplace(r.level);
    if (fresh) {
      order.push_back(r.level);
      it->second.level = r.level;
      it->second.tau = r.tau_true;
    }
    auto& s = it->second;
    s.mean_psnr += r.psnr_db;
    s.mean_ssim += r.ssim;
    s.mean_tau_used += r.tau_used;
    s.count += 1;
  }
  report.mean_psnr = report.mean_ssim = 0.0;
  for (double level : order) {
    auto s = acc[level];
    s.mean_psnr /= s.count;
    s.mean_ssim /= s.count;
    s.mean_tau_used /= s.count;
    report.mean_psnr += s.mean_psnr;
    report.mean_ssim += s.mean_ssim;
    report.levels.push_back(s);
  }
  if (!order.empty()) {
    report.mean_psnr /= static_cast<double>(order.size());
    report.mean_ssim /= static_cast<double>(order.size());
  }
}

bool totals_consistent(const ExperimentReport& report, double tolerance) {
  ExperimentReport copy;
  copy.rows = report.rows;
  aggregate(copy);
  if (copy.levels.size() != report.levels.size()) return false;
  for (std::size_t i = 0; i < copy.levels.size(); ++i) {
    const auto& a = copy.levels[i];
    const auto& b = report.levels[i];
    if (a.level != b.level || a.count != b.count || std::abs(a.mean_psnr - b.mean_psnr) > tolerance ||
        std::abs(a.mean_ssim - b.mean_ssim) > tolerance)
      return false;
  }
  return std::abs(copy.mean_psnr - report.mean_psnr) <= tolerance &&
         std::abs(copy.mean_ssim - report.mean_ssim) <= tolerance;
}

std::string metrics_csv(const ExperimentReport& report) {
  const Family family = degradation::parse_family(report.config.at("family"));
  const int scale = std::stoi(report.config.at("scale"));
  std::string out = "image_id,degradation_params,psnr_db,ssim\n";
  for (const auto& r : report.rows)
    out += r.image_id + "," + degradation_params(family, scale, r.level, r.tau_true) + "," +
           fmt("%.10f", r.psnr_db) + "," + fmt("%.10f", r.ssim) + "\n";
  return out;
}

std::string summary_csv(const ExperimentReport& report) {
  std::string out = "level,tau,mean_psnr_db,mean_ssim,mean_tau_used,count\n";
  int total = 0;
  for (const auto& s : report.levels) {
    out += fmt("%.6g", s.level) + "," + fmt("%.6g", s.tau) + "," + fmt("%.10f", s.mean_psnr) + "," +
           fmt("%.10f", s.mean_ssim) + "," + fmt("%.10f", s.mean_tau_used) + "," + std::to_string(s.count) + "\n";
    total += s.count;
  }
  out += "overall,," + fmt("%.10f", report.mean_psnr) + "," + fmt("%.10f", report.mean_ssim) + ",," +
         std::to_string(total) + "\n";
  return out;
}

std::vector<CsvMetric> read_metrics_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("image_id,degradation_params,psnr_db,ssim", 0) != 0)
    throw DataError(path.string() + ": missing metrics header");
  std::vector<CsvMetric> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 4) throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 4 columns");
    CsvMetric m;
    m.image_id = cols[0];
    m.params = parse_degradation_params(cols[1]);
    try {
      m.psnr_db = std::stod(cols[2]);
      m.ssim = std::stod(cols[3]);
    } catch (const std::logic_error&) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad number");
    }
    out.push_back(std::move(m));
  }
  return out;
}

FamilySetup setup_from_config(const Config& cfg) {
  Family family;
  try {
    family = degradation::parse_family(cfg.get_string("family", "noise"));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const int scale = cfg.get_int("scale", 2);
  FamilySetup s = degradation::default_setup(family, scale);
  s.bounds.min = cfg.get_double("bounds.min", s.bounds.min);
  s.bounds.max = cfg.get_double("bounds.max", s.bounds.max);
  s.kernel_size = cfg.get_int("kernel_size", s.kernel_size);
  s.fixed_sigma = cfg.get_double("fixed_sigma", s.fixed_sigma);
  s.sigma_u = cfg.get_double("sigma_u", s.sigma_u);
  s.sigma_v = cfg.get_double("sigma_v", s.sigma_v);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return s;
}

sr::TLSRConfig tlsr_config_from(const Config& cfg) {
  sr::TLSRConfig c;
  c.family = setup_from_config(cfg);
  c.scale = c.family.scale;
  c.trunk_blocks = cfg.get_int("model.trunk_blocks", c.trunk_blocks);
  c.channels = cfg.get_int("model.channels", c.channels);
  c.transitional_blocks = cfg.get_int("model.transitional_blocks", c.transitional_blocks);
  c.batch = cfg.get_int("train.batch", c.batch);
  c.patch = cfg.get_int("train.patch", c.patch);
  c.lr = cfg.get_double("train.lr", c.lr);
  c.halving_period = cfg.get_int("train.halving_period", c.halving_period);
  c.steps = cfg.get_int("train.steps", c.steps);
  c.joint_dot = cfg.get_bool("train.joint_dot", c.joint_dot);
  c.dot_weight = cfg.get_double("train.dot_weight", c.dot_weight);
  c.log_every = cfg.get_int("train.log_every", c.log_every);
  try {
    c.mode = sr::parse_train_mode(cfg.get_string("train.mode", "transitional"));
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

dotnet::DoTNetConfig dotnet_config_from(const Config& cfg) {
  dotnet::DoTNetConfig c;
  c.patch_count = cfg.get_int("dot.patch_count", c.patch_count);
  c.patch_size = cfg.get_int("dot.patch_size", c.patch_size);
  c.bottleneck_blocks = cfg.get_int("dot.bottleneck_blocks", c.bottleneck_blocks);
  c.channels = cfg.get_int("dot.channels", c.channels);
  c.bottleneck_channels = cfg.get_int("dot.bottleneck_channels", c.bottleneck_channels);
  c.fc_hidden = cfg.get_int("dot.fc_hidden", c.fc_hidden);
  c.pool_stages = cfg.get_int("dot.pool_stages", c.pool_stages);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

dotnet::DoTTrainSettings dot_train_settings_from(const Config& cfg) {
  dotnet::DoTTrainSettings s;
  s.steps = cfg.get_int("dot.steps", s.steps);
  s.batch = cfg.get_int("dot.batch", s.batch);
  s.lr_size = cfg.get_int("dot.lr_size", s.lr_size);
  s.adam.lr = cfg.get_double("dot.lr", s.adam.lr);
  s.halving_period = cfg.get_int("dot.halving_period", s.halving_period);
  s.eval_every = cfg.get_int("dot.eval_every", s.eval_every);
  s.keep_best = cfg.get_bool("dot.keep_best", s.keep_best);
  if (s.steps < 0 || s.batch < 1 || s.eval_every < 1 || s.adam.lr <= 0.0)
    throw UsageError("invalid DoT training schedule");
  return s;
}

Dataset dataset_from_config(const Config& cfg, const std::string& prefix, int scale) {
  if (cfg.has(prefix + ".dir")) return ingest_dataset(cfg.get_string(prefix + ".dir", ""), scale);
  const int count = cfg.get_int(prefix + ".synthetic", 0);
  if (count < 1) throw UsageError("config needs " + prefix + ".dir or " + prefix + ".synthetic");
  const int size = cfg.get_int(prefix + ".size", 96);
  Rng rng(cfg.get_u64(prefix + ".seed", 1));
  return make_dataset(synthesize_scenes(count, size, size, rng), scale);
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

ExperimentReport run_experiment(const Config& cfg, const fs::path& out) {
  const auto io_start = Clock::now();
  EvalSettings settings;
  settings.setup = setup_from_config(cfg);
  settings.method = parse_eval_method(cfg.get_string("eval.method", "blind"));
  settings.fixed_tau = cfg.get_double("eval.tau", 0.0);
  settings.levels = cfg.get_list("eval.levels");
  settings.border = cfg.get_int("eval.border", -1);
  settings.seed = cfg.get_u64("seed", 0);

  const Dataset data = dataset_from_config(cfg, "data.eval", settings.setup.scale);
  for (const auto& w : data.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::unique_ptr<sr::TLSRNet> model;
  dotnet::LoadedDoTNet dot;
  if (settings.method != EvalMethod::Bicubic) model = sr::load_tlsr(cfg.require_string("eval.sr_checkpoint"));
  if (settings.method == EvalMethod::Blind) dot = dotnet::load_dotnet(cfg.require_string("eval.dot_checkpoint"));
  const double io_seconds = seconds_since(io_start);

  ExperimentReport report = evaluate(data, settings, model.get(), dot.model ? &dot : nullptr);
  for (const auto& [k, v] : cfg.entries()) report.config["config." + k] = v;

  const auto write_start = Clock::now();
  fs::create_directories(out);
  write_text_file(out / "metrics.csv", metrics_csv(report));
  write_text_file(out / "summary.csv", summary_csv(report));
  std::string snapshot;
  for (const auto& [k, v] : report.config) snapshot += k + " = " + v + "\n";
  write_text_file(out / "config.txt", snapshot);
  Series s;
  s.label = to_string(settings.method);
  for (const auto& l : report.levels) {
    s.x.push_back(l.level);
    s.y.push_back(l.mean_psnr);
  }
  write_text_file(out / "psnr.svg",
                  svg_line_plot(std::span<const Series>(&s, 1),
                                {"PSNR per degradation level", degradation::to_string(settings.setup.family) + " level",
                                 "PSNR (dB)"}));
  report.timings["io"] = io_seconds + seconds_since(write_start);
  std::string timings;
  for (const auto& [k, v] : report.timings) timings += k + " = " + fmt("%.6f", v) + "\n";
  write_text_file(out / "timings.txt", timings);
  return report;
}

TrainSummary train_tlsr_experiment(const Config& cfg, const fs::path& out) {
  const auto io_start = Clock::now();
  const sr::TLSRConfig tc = tlsr_config_from(cfg);
  const Dataset data = dataset_from_config(cfg, "data.train", tc.scale);
  for (const auto& w : data.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  dotnet::LoadedDoTNet dot;
  if (tc.joint_dot) dot = dotnet::load_dotnet(cfg.require_string("train.dot_checkpoint"));
  TrainSummary summary;
  summary.timings["io"] = seconds_since(io_start);

  const Rng root(cfg.get_u64("seed", 0));
  Rng init = root.child("tlsr.init");
  sr::TLSRNet model(tc, data.mean, init);
  Rng train_rng = root.child("tlsr.train");
  const auto images = data.images();
  const auto train_start = Clock::now();
  auto result = sr::tlsr_train(model, images, train_rng, dot.model.get());
  summary.timings["train"] = seconds_since(train_start);

  fs::create_directories(out);
  summary.checkpoint = out / "tlsr.ckpt";
  nn::save_checkpoint(summary.checkpoint, result.checkpoint);
  if (tc.joint_dot) dotnet::save_dotnet(out / "dotnet.ckpt", *dot.model, dot.setup, tc.steps);
  std::string csv = "step,loss,lr\n";
  for (const auto& r : result.history)
    csv += std::to_string(r.step) + "," + fmt("%.10f", r.loss) + "," + fmt("%.6g", r.lr) + "\n";
  summary.history_csv = out / "loss.csv";
  write_text_file(summary.history_csv, csv);
  return summary;
}

TrainSummary train_dot_experiment(const Config& cfg, const fs::path& out) {
  const auto io_start = Clock::now();
  const FamilySetup setup = setup_from_config(cfg);
  const auto dc = dotnet_config_from(cfg);
  const auto ts = dot_train_settings_from(cfg);
  try {
    dc.validate_for(setup);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const Dataset train = dataset_from_config(cfg, "data.train", setup.scale);
  for (const auto& w : train.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  const Rng root(cfg.get_u64("seed", 0));
  std::vector<dotnet::ValidationSample> val;
  if (cfg.has("data.val.dir") || cfg.has("data.val.synthetic")) {
    const Dataset vd = dataset_from_config(cfg, "data.val", setup.scale);
    const auto vimgs = vd.images();
    Rng vr = root.child("dot.valset");
    val = dotnet::make_validation_set(vimgs, setup, cfg.get_int("dot.val_per_image", 4), ts.lr_size, vr);
  }
  TrainSummary summary;
  summary.timings["io"] = seconds_since(io_start);

  Rng init = root.child("dot.init");
  dotnet::DoTNet model(dc, init);
  Rng train_rng = root.child("dot.train");
  const auto images = train.images();
  const auto train_start = Clock::now();
  auto result = dotnet::train_dotnet(model, images, val, setup, ts, train_rng);
  summary.timings["train"] = seconds_since(train_start);

  fs::create_directories(out);
  summary.checkpoint = out / "dotnet.ckpt";
  nn::save_checkpoint(summary.checkpoint, result.checkpoint);
  std::string csv = "step,loss,val_mae\n";
  for (const auto& r : result.history)
    csv += std::to_string(r.step) + "," + fmt("%.10f", r.loss) + "," + fmt("%.10f", r.val_mae) + "\n";
  summary.history_csv = out / "mae.csv";
  write_text_file(summary.history_csv, csv);
  return summary;
}

}  // namespace tlsr::harness
