#include "tsmtl/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "text_util.hpp"
#include "tsmtl/experiment.hpp"

namespace tsmtl {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b"};
constexpr int kPaletteSize = 6;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Maps data coordinates onto the pixel frame; y may be logarithmic.
struct Frame {
  double x_min, x_max, y_min, y_max;
  int width, height;
  bool log_y;

  double px(double x) const {
    double span = x_max - x_min;
    double f = span > 0 ? (x - x_min) / span : 0.5;
    return kMarginLeft + f * (width - kMarginLeft - kMarginRight);
  }
  double py(double y) const {
    double lo = log_y ? std::log10(y_min) : y_min;
    double hi = log_y ? std::log10(y_max) : y_max;
    double v = log_y ? std::log10(y) : y;
    double span = hi - lo;
    double f = span > 0 ? (v - lo) / span : 0.5;
    return height - kMarginBottom - f * (height - kMarginTop - kMarginBottom);
  }
};

std::vector<double> linear_ticks(double lo, double hi, int target) {
  if (!(hi > lo)) return {lo};
  double raw = (hi - lo) / target;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (mag * m >= raw) { step = mag * m; break; }
  }
  std::vector<double> ticks;
  double first = std::ceil(lo / step) * step;
  for (double v = first; v <= hi + 1e-9 * step; v += step) ticks.push_back(v);
  return ticks;
}

std::vector<double> log_ticks(double lo, double hi) {
  std::vector<double> ticks;
  int e0 = static_cast<int>(std::floor(std::log10(lo)));
  int e1 = static_cast<int>(std::ceil(std::log10(hi)));
  int stride = std::max(1, (e1 - e0) / 8);
  for (int e = e0; e <= e1; e += stride) {
    double v = std::pow(10.0, e);
    if (v >= lo / 1.001 && v <= hi * 1.001) ticks.push_back(v);
  }
  if (ticks.empty()) ticks = {lo, hi};
  return ticks;
}

void open_svg(std::ostream& out, int width, int height, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"#ffffff\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << xml_escape(title)
      << "</text>\n";
}

void draw_axes(std::ostream& out, const Frame& frame, const std::string& x_label,
               const std::string& y_label, const std::vector<double>& x_ticks,
               const std::vector<double>& y_ticks) {
  double x0 = kMarginLeft;
  double x1 = frame.width - kMarginRight;
  double y0 = frame.height - kMarginBottom;
  double y1 = kMarginTop;
  out << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x1)
      << "\" y2=\"" << fmt(y0) << "\" stroke=\"#000000\"/>\n";
  out << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x0)
      << "\" y2=\"" << fmt(y1) << "\" stroke=\"#000000\"/>\n";
  for (double v : x_ticks) {
    double x = frame.px(v);
    out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x)
        << "\" y2=\"" << fmt(y0 + 5) << "\" stroke=\"#000000\"/>\n";
    out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y0 + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_tick(v) << "</text>\n";
  }
  for (double v : y_ticks) {
    double y = frame.py(v);
    out << "<line x1=\"" << fmt(x0 - 5) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(x0)
        << "\" y2=\"" << fmt(y) << "\" stroke=\"#000000\"/>\n";
    out << "<text x=\"" << fmt(x0 - 8) << "\" y=\"" << fmt(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_tick(v) << "</text>\n";
  }
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << frame.height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << xml_escape(x_label) << "</text>\n";
  out << "<text x=\"16\" y=\"" << (y0 + y1) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << (y0 + y1) / 2 << ")\">" << xml_escape(y_label)
      << "</text>\n";
}

void draw_legend(std::ostream& out, const Frame& frame,
                 const std::vector<std::string>& labels) {
  double x = frame.width - kMarginRight - 150;
  double y = kMarginTop + 8;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const char* color = kPalette[i % kPaletteSize];
    out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(x + 22)
        << "\" y2=\"" << fmt(y) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << fmt(x + 28) << "\" y=\"" << fmt(y + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(labels[i])
        << "</text>\n";
    y += 16;
  }
}

}  // namespace

void write_line_chart(const std::vector<Series>& series, const LineChartOptions& options,
                      const std::filesystem::path& path) {
  if (series.empty()) throw std::invalid_argument("write_line_chart: no series");
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_min = x_min;
  double y_max = -x_min;
  bool any_point = false;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size()) {
      throw std::invalid_argument("write_line_chart: x/y length mismatch in series '" +
                                  s.label + "'");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (options.log_y && !(s.y[i] > 0)) continue;
      any_point = true;
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  }
  if (!any_point) throw std::invalid_argument("write_line_chart: no plottable points");
  if (x_min == x_max) { x_min -= 0.5; x_max += 0.5; }
  if (y_min == y_max) {
    if (options.log_y) { y_min /= 2; y_max *= 2; }
    else { y_min -= 0.5; y_max += 0.5; }
  }

  Frame frame{x_min, x_max, y_min, y_max, options.width, options.height, options.log_y};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  open_svg(out, options.width, options.height, options.title);
  draw_axes(out, frame, options.x_label, options.y_label,
            linear_ticks(x_min, x_max, 6),
            options.log_y ? log_ticks(y_min, y_max) : linear_ticks(y_min, y_max, 5));

  std::vector<std::string> labels;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const Series& s = series[i];
    labels.push_back(s.label);
    std::ostringstream points;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (options.log_y && !(s.y[k] > 0)) continue;
      points << fmt(frame.px(s.x[k])) << ',' << fmt(frame.py(s.y[k])) << ' ';
    }
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[i % kPaletteSize]
        << "\" stroke-width=\"1.5\" points=\"" << points.str() << "\"/>\n";
  }
  draw_legend(out, frame, labels);
  out << "</svg>\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_bar_chart(const std::vector<BarGroup>& groups, const BarChartOptions& options,
                     const std::filesystem::path& path) {
  if (groups.empty()) throw std::invalid_argument("write_bar_chart: no groups");
  const std::size_t num_series = options.series_labels.size();
  double y_min = std::numeric_limits<double>::infinity();
  double y_max = -y_min;
  for (const BarGroup& g : groups) {
    if (g.values.size() != num_series) {
      throw std::invalid_argument("write_bar_chart: group '" + g.label +
                                  "' value count differs from series labels");
    }
    if (!g.errors.empty() && g.errors.size() != num_series) {
      throw std::invalid_argument("write_bar_chart: group '" + g.label +
                                  "' error count differs from series labels");
    }
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      double err = g.errors.empty() ? 0.0 : g.errors[i];
      double lo = g.values[i] - err;
      double hi = g.values[i] + err;
      if (options.log_y) {
        if (g.values[i] > 0) {
          y_min = std::min(y_min, lo > 0 ? lo : g.values[i]);
          y_max = std::max(y_max, hi);
        }
      } else {
        y_min = std::min(y_min, std::min(0.0, lo));
        y_max = std::max(y_max, hi);
      }
    }
  }
  if (!(y_max > -std::numeric_limits<double>::infinity())) {
    throw std::invalid_argument("write_bar_chart: no plottable values");
  }
  if (options.log_y) { y_min /= 2; y_max *= 2; }
  else if (y_max == y_min) { y_max += 1; }

  Frame frame{0, 1, y_min, y_max, options.width, options.height, options.log_y};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  open_svg(out, options.width, options.height, options.title);
  draw_axes(out, frame, "", options.y_label, {},
            options.log_y ? log_ticks(y_min, y_max) : linear_ticks(y_min, y_max, 5));

  double plot_left = kMarginLeft;
  double plot_width = options.width - kMarginLeft - kMarginRight;
  double base_y = frame.py(options.log_y ? y_min : std::max(0.0, y_min));
  double group_width = plot_width / groups.size();
  double bar_width = group_width * 0.8 / std::max<std::size_t>(1, num_series);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const BarGroup& g = groups[gi];
    double group_x = plot_left + gi * group_width + group_width * 0.1;
    for (std::size_t i = 0; i < num_series; ++i) {
      double value = g.values[i];
      double x = group_x + i * bar_width;
      if (!options.log_y || value > 0) {
        double top = frame.py(value);
        out << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(std::min(top, base_y))
            << "\" width=\"" << fmt(bar_width * 0.9) << "\" height=\""
            << fmt(std::abs(base_y - top)) << "\" fill=\""
            << kPalette[i % kPaletteSize] << "\"/>\n";
        if (!g.errors.empty() && g.errors[i] > 0) {
          double lo = value - g.errors[i];
          double hi = value + g.errors[i];
          if (options.log_y && !(lo > 0)) lo = value;
          double cx = x + bar_width * 0.45;
          out << "<line x1=\"" << fmt(cx) << "\" y1=\"" << fmt(frame.py(lo))
              << "\" x2=\"" << fmt(cx) << "\" y2=\"" << fmt(frame.py(hi))
              << "\" stroke=\"#000000\"/>\n";
          for (double v : {lo, hi}) {
            out << "<line x1=\"" << fmt(cx - 4) << "\" y1=\"" << fmt(frame.py(v))
                << "\" x2=\"" << fmt(cx + 4) << "\" y2=\"" << fmt(frame.py(v))
                << "\" stroke=\"#000000\"/>\n";
          }
        }
      }
    }
    out << "<text x=\"" << fmt(group_x + num_series * bar_width / 2) << "\" y=\""
        << fmt(options.height - kMarginBottom + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << xml_escape(g.label) << "</text>\n";
  }
  draw_legend(out, frame, options.series_labels);
  out << "</svg>\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::filesystem::path> write_plots(const std::filesystem::path& trace_dir,
                                               const std::filesystem::path& out_dir) {
  std::vector<SummaryRow> rows = read_summary_csv(trace_dir / "summary.csv");
  if (rows.empty()) throw std::runtime_error("write_plots: summary has no rows");
  std::filesystem::create_directories(out_dir);

  std::vector<std::string> variants;
  std::vector<double> rhos;
  for (const SummaryRow& row : rows) {
    if (std::find(variants.begin(), variants.end(), row.variant) == variants.end()) {
      variants.push_back(row.variant);
    }
    if (std::find(rhos.begin(), rhos.end(), row.rho) == rhos.end()) {
      rhos.push_back(row.rho);
    }
  }

  std::vector<std::filesystem::path> written;

  // Convergence curves per rho, first repeat of each variant.
  for (double rho : rhos) {
    std::vector<Series> residual, objective, val;
    for (const std::string& variant : variants) {
      int repeat = -1;
      for (const SummaryRow& row : rows) {
        if (row.variant == variant && row.rho == rho) {
          repeat = repeat < 0 ? row.repeat : std::min(repeat, row.repeat);
        }
      }
      if (repeat < 0) continue;
      TraceFile file = read_trace_csv(trace_dir / trace_filename(variant, rho, repeat));
      if (file.records.empty()) continue;
      Series r{variant, {}, {}}, o{variant, {}, {}}, v{variant, {}, {}};
      for (const TraceRecord& rec : file.records) {
        double iter = static_cast<double>(rec.iter);
        r.x.push_back(iter);
        r.y.push_back(rec.r_total);
        o.x.push_back(iter);
        o.y.push_back(rec.objective);
        if (rec.val_nmse.has_value()) {
          v.x.push_back(iter);
          v.y.push_back(*rec.val_nmse);
        }
      }
      residual.push_back(std::move(r));
      objective.push_back(std::move(o));
      if (!v.x.empty()) val.push_back(std::move(v));
    }
    std::string tag = text::format_double(rho);
    if (!residual.empty()) {
      LineChartOptions opt;
      opt.title = "Primal residual, rho = " + tag;
      opt.x_label = "iteration";
      opt.y_label = "r_total";
      opt.log_y = true;
      auto path = out_dir / ("residual_rho" + tag + ".svg");
      write_line_chart(residual, opt, path);
      written.push_back(path);
    }
    if (!objective.empty()) {
      LineChartOptions opt;
      opt.title = "Objective, rho = " + tag;
      opt.x_label = "iteration";
      opt.y_label = "objective";
      auto path = out_dir / ("objective_rho" + tag + ".svg");
      write_line_chart(objective, opt, path);
      written.push_back(path);
    }
    if (!val.empty()) {
      LineChartOptions opt;
      opt.title = "Validation nMSE, rho = " + tag;
      opt.x_label = "iteration";
      opt.y_label = "nMSE";
      auto path = out_dir / ("val_nmse_rho" + tag + ".svg");
      write_line_chart(val, opt, path);
      written.push_back(path);
    }
  }

  // Last-100 aggregate bars over repeats.
  auto bar_chart = [&](auto field, const std::string& name, const std::string& y_label,
                       bool log_y) {
    std::vector<BarGroup> groups;
    for (double rho : rhos) {
      BarGroup group;
      group.label = "rho=" + text::format_double(rho);
      for (const std::string& variant : variants) {
        std::vector<double> values;
        for (const SummaryRow& row : rows) {
          if (row.variant == variant && row.rho == rho && field(row).has_value()) {
            values.push_back(*field(row));
          }
        }
        if (values.empty()) {
          group.values.push_back(log_y ? 0.0 : 0.0);
          group.errors.push_back(0.0);
          continue;
        }
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= values.size();
        double sq = 0.0;
        for (double v : values) sq += (v - mean) * (v - mean);
        group.values.push_back(mean);
        group.errors.push_back(std::sqrt(sq / values.size()));
      }
      groups.push_back(std::move(group));
    }
    BarChartOptions opt;
    opt.title = name;
    opt.y_label = y_label;
    opt.series_labels = variants;
    opt.log_y = log_y;
    auto path = out_dir / (std::string(y_label == "nMSE" ? "val_nmse" : "r_total") +
                           "_last100.svg");
    write_bar_chart(groups, opt, path);
    written.push_back(path);
  };
  bar_chart([](const SummaryRow& r) { return r.r_total_mean; },
            "Last-100 mean primal residual", "r_total", true);
  bool any_val = std::any_of(rows.begin(), rows.end(), [](const SummaryRow& r) {
    return r.val_nmse_mean.has_value();
  });
  if (any_val) {
    bar_chart([](const SummaryRow& r) { return r.val_nmse_mean; },
              "Last-100 mean validation nMSE", "nMSE", false);
  }
  return written;
}

}  // namespace tsmtl
