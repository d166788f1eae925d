#include "clbayes/svg.hpp"

#include <cstdio>

#include "clbayes/errors.hpp"

namespace clbayes {

namespace {

constexpr double kSize = 640.0;
constexpr double kMargin = 70.0;
constexpr double kPlot = kSize - 2.0 * kMargin;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#17becf", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

double px(double u) { return kMargin + u * kPlot; }
double py(double v) { return kSize - kMargin - v * kPlot; }

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string svg_calibration_plot(const std::vector<CalibrationCurve>& curves,
                                 const std::string& title) {
  if (curves.empty()) throw InvalidInput("svg_calibration_plot: no curves");
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kSize) + "\" height=\"" +
         num(kSize) + "\" viewBox=\"0 0 " + num(kSize) + " " + num(kSize) + "\">\n";
  svg += "<rect width=\"" + num(kSize) + "\" height=\"" + num(kSize) + "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(kSize / 2.0) + "\" y=\"32\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"17\">" + escape(title) + "</text>\n";

  // Axes, ticks and grid.
  for (int i = 0; i <= 10; ++i) {
    double v = static_cast<double>(i) / 10.0;
    svg += "<line x1=\"" + num(px(v)) + "\" y1=\"" + num(py(0)) + "\" x2=\"" + num(px(v)) +
           "\" y2=\"" + num(py(1)) + "\" stroke=\"#eeeeee\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + num(px(0)) + "\" y1=\"" + num(py(v)) + "\" x2=\"" + num(px(1)) +
           "\" y2=\"" + num(py(v)) + "\" stroke=\"#eeeeee\" stroke-width=\"1\"/>\n";
    if (i % 2 == 0) {
      svg += "<text x=\"" + num(px(v)) + "\" y=\"" + num(py(0) + 22.0) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + num(v) +
             "</text>\n";
      svg += "<text x=\"" + num(px(0) - 10.0) + "\" y=\"" + num(py(v) + 4.0) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" + num(v) +
             "</text>\n";
    }
  }
  svg += "<rect x=\"" + num(px(0)) + "\" y=\"" + num(py(1)) + "\" width=\"" + num(kPlot) +
         "\" height=\"" + num(kPlot) + "\" fill=\"none\" stroke=\"#333333\"/>\n";
  svg += "<line x1=\"" + num(px(0)) + "\" y1=\"" + num(py(0)) + "\" x2=\"" + num(px(1)) +
         "\" y2=\"" + num(py(1)) +
         "\" stroke=\"#888888\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>\n";

  // Axis labels.
  svg += "<text x=\"" + num(kSize / 2.0) + "\" y=\"" + num(kSize - 18.0) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">nominal coverage"
         "</text>\n";
  svg += "<text x=\"20\" y=\"" + num(kSize / 2.0) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" transform=\""
         "rotate(-90 20 " + num(kSize / 2.0) + ")\">effective coverage</text>\n";

  // Curves.
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& curve = curves[c];
    if (curve.nominal.size() != curve.effective.size() || curve.nominal.empty()) {
      throw InvalidInput("svg_calibration_plot: malformed curve");
    }
    std::string points;
    for (std::size_t i = 0; i < curve.nominal.size(); ++i) {
      if (i) points.push_back(' ');
      points += num(px(curve.nominal[i])) + "," + num(py(curve.effective[i]));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(kPalette[c % kPaletteSize]) +
           "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
  }

  // Legend.
  for (std::size_t c = 0; c < curves.size(); ++c) {
    double y = kMargin + 18.0 + 18.0 * static_cast<double>(c);
    svg += "<line x1=\"" + num(kMargin + 8.0) + "\" y1=\"" + num(y - 4.0) + "\" x2=\"" +
           num(kMargin + 34.0) + "\" y2=\"" + num(y - 4.0) + "\" stroke=\"" +
           kPalette[c % kPaletteSize] + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + num(kMargin + 40.0) + "\" y=\"" + num(y) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" +
           escape(curves[c].setting_id + " " + curves[c].method) + "</text>\n";
  }

  svg += "</svg>\n";
  return svg;
}

}  // namespace clbayes
