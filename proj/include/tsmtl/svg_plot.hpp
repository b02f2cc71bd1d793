#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tsmtl {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // same length as x
};

struct LineChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;  // nonpositive values are dropped from the chart
  int width = 720;
  int height = 440;
};

// Self-contained SVG line chart, one polyline per series. Throws on empty
// input or an unwritable path.
void write_line_chart(const std::vector<Series>& series, const LineChartOptions& options,
                      const std::filesystem::path& path);

struct BarGroup {
  std::string label;            // x-axis category
  std::vector<double> values;   // one per series
  std::vector<double> errors;   // deviation bar half-heights, may be empty
};

struct BarChartOptions {
  std::string title;
  std::string y_label;
  std::vector<std::string> series_labels;
  bool log_y = false;
  int width = 720;
  int height = 440;
};

void write_bar_chart(const std::vector<BarGroup>& groups, const BarChartOptions& options,
                     const std::filesystem::path& path);

// Reads every trace/summary CSV under trace_dir and renders the standard
// report: residual curves (log y), objective curves, validation nMSE curves
// per rho, and the last-100 mean bar chart with deviation bars. Returns the
// files written.
std::vector<std::filesystem::path> write_plots(const std::filesystem::path& trace_dir,
                                               const std::filesystem::path& out_dir);

}  // namespace tsmtl
