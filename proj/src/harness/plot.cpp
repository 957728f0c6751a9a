#include "msense/harness/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace msense::harness {

namespace {

constexpr double kPanelW = 460;
constexpr double kPanelH = 320;
constexpr double kMarginL = 70;
constexpr double kMarginR = 20;
constexpr double kMarginT = 30;
constexpr double kMarginB = 45;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
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

struct Curves {
  const std::vector<double>* mean;
  const std::vector<double>* std;
};

void panel(std::ostringstream& svg, const std::vector<SeriesData>& series, bool y_log,
           bool train, double x_off) {
  auto curves = [&](const SeriesData& s) {
    return train ? Curves{&s.train_mean, &s.train_std} : Curves{&s.test_mean, &s.test_std};
  };
  // axis ranges
  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = std::numeric_limits<double>::infinity(), y_max = -y_min;
  for (const auto& s : series) {
    const auto c = curves(s);
    for (std::size_t i = 0; i < s.iter.size(); ++i) {
      x_min = std::min(x_min, static_cast<double>(s.iter[i]));
      x_max = std::max(x_max, static_cast<double>(s.iter[i]));
      const double lo = (*c.mean)[i] - 0.5 * (*c.std)[i];
      const double hi = (*c.mean)[i] + 0.5 * (*c.std)[i];
      for (double v : {lo, (*c.mean)[i], hi}) {
        if (!std::isfinite(v)) continue;
        if (y_log && v <= 0) continue;
        y_min = std::min(y_min, v);
        y_max = std::max(y_max, v);
      }
    }
  }
  if (!std::isfinite(y_min)) y_min = y_max = 1;
  if (x_max <= x_min) x_max = x_min + 1;
  auto ty = [&](double v) { return y_log ? std::log10(v) : v; };
  double ty_min = ty(y_min), ty_max = ty(y_max);
  if (ty_max <= ty_min) {
    ty_min -= 1;
    ty_max += 1;
  }
  const double plot_w = kPanelW - kMarginL - kMarginR;
  const double plot_h = kPanelH - kMarginT - kMarginB;
  auto px = [&](double x) { return x_off + kMarginL + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double v) {
    double t = (y_log && v <= 0) ? ty_min : ty(v);
    t = std::clamp(t, ty_min, ty_max);
    return kMarginT + (ty_max - t) / (ty_max - ty_min) * plot_h;
  };

  const std::string id = train ? "train" : "test";
  svg << "<g class=\"panel\" id=\"" << id << "\">\n";
  svg << "<rect x=\"" << num(x_off + kMarginL) << "\" y=\"" << num(kMarginT) << "\" width=\""
      << num(plot_w) << "\" height=\"" << num(plot_h)
      << "\" fill=\"none\" stroke=\"#000\" stroke-width=\"1\"/>\n";
  svg << "<text x=\"" << num(x_off + kPanelW / 2) << "\" y=\"18\" text-anchor=\"middle\" "
      << "font-size=\"13\">" << (train ? "training error" : "test error") << "</text>\n";
  svg << "<text x=\"" << num(x_off + kMarginL + plot_w / 2) << "\" y=\"" << num(kPanelH - 8)
      << "\" text-anchor=\"middle\" font-size=\"11\">iteration</text>\n";
  // ticks
  for (int i = 0; i <= 4; ++i) {
    const double fx = x_min + (x_max - x_min) * i / 4.0;
    svg << "<text x=\"" << num(px(fx)) << "\" y=\"" << num(kMarginT + plot_h + 14)
        << "\" text-anchor=\"middle\" font-size=\"10\">" << tick_label(fx) << "</text>\n";
    const double t = ty_min + (ty_max - ty_min) * i / 4.0;
    const double fy = y_log ? std::pow(10.0, t) : t;
    svg << "<text x=\"" << num(x_off + kMarginL - 4) << "\" y=\""
        << num(kMarginT + (ty_max - t) / (ty_max - ty_min) * plot_h + 3)
        << "\" text-anchor=\"end\" font-size=\"10\">" << tick_label(fy) << "</text>\n";
  }

  auto path = [&](const SeriesData& s, const std::vector<double>& mean,
                  const std::vector<double>& sd, double sign) {
    std::ostringstream d;
    for (std::size_t i = 0; i < s.iter.size(); ++i) {
      const double v = mean[i] + sign * 0.5 * sd[i];
      d << (i == 0 ? "M" : " L") << num(px(static_cast<double>(s.iter[i]))) << ','
        << num(py(v));
    }
    return d.str();
  };
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const auto c = curves(s);
    const char* color = kColors[si % std::size(kColors)];
    svg << "<path class=\"mean\" d=\"" << path(s, *c.mean, *c.std, 0.0) << "\" fill=\"none\" "
        << "stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    for (double sign : {1.0, -1.0})
      svg << "<path class=\"band\" d=\"" << path(s, *c.mean, *c.std, sign)
          << "\" fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1\" stroke-dasharray=\"2,3\"/>\n";
    // legend
    const double ly = kMarginT + 14 + 16 * static_cast<double>(si);
    svg << "<line x1=\"" << num(x_off + kPanelW - kMarginR - 110) << "\" y1=\"" << num(ly - 4)
        << "\" x2=\"" << num(x_off + kPanelW - kMarginR - 90) << "\" y2=\"" << num(ly - 4)
        << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    svg << "<text x=\"" << num(x_off + kPanelW - kMarginR - 86) << "\" y=\"" << num(ly)
        << "\" font-size=\"11\">" << escape(s.label) << "</text>\n";
  }
  svg << "</g>\n";
}

}  // namespace

std::string render_svg(const std::vector<SeriesData>& series, bool y_log, Metric metric) {
  const int panels = metric == Metric::Both ? 2 : 1;
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kPanelW * panels)
      << "\" height=\"" << num(kPanelH) << "\" viewBox=\"0 0 " << num(kPanelW * panels) << ' '
      << num(kPanelH) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  double x_off = 0;
  if (metric != Metric::Test) {
    panel(svg, series, y_log, true, x_off);
    x_off += kPanelW;
  }
  if (metric != Metric::Train) panel(svg, series, y_log, false, x_off);
  svg << "</svg>\n";
  return svg.str();
}

void render_plot(const std::vector<std::filesystem::path>& csv_paths,
                 const std::filesystem::path& output_svg, bool y_log, Metric metric) {
  if (csv_paths.empty()) throw std::invalid_argument("render_plot: no input CSV files");
  std::vector<SeriesData> series;
  series.reserve(csv_paths.size());
  for (const auto& p : csv_paths) series.push_back(read_series_csv(p));
  const std::string text = render_svg(series, y_log, metric);
  std::ofstream out(output_svg, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + output_svg.string());
  out << text;
}

}  // namespace msense::harness
