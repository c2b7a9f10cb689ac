#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tlsr::harness {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotLabels {
  std::string title;
  std::string x_label;
  std::string y_label;
};

/// Standalone SVG line chart with markers, axis ticks and a legend.
std::string svg_line_plot(std::span<const Series> series, const PlotLabels& labels);

/// Mean PSNR per level of one metrics CSV, labelled with the file stem.
Series psnr_series_from_csv(const std::filesystem::path& metrics_csv);

}  // namespace tlsr::harness
