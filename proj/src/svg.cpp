#include "dsgd/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dsgd/io.hpp"

namespace dsgd {

namespace {

constexpr double kWidth = 820.0;
constexpr double kHeight = 540.0;
constexpr double kLeft = 80.0, kRight = 30.0, kTop = 46.0, kBottom = 60.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string render_plot_svg_string(const std::vector<Curve>& curves,
                                   const PlotOptions& options) {
  double xmin = 0.0, xmax = 1.0, ymin = 1e-1, ymax = 1.0;
  bool have_data = false;
  for (const auto& c : curves)
    for (const auto& [x, y] : c.points) {
      const double yy = options.y_log ? std::max(y, 1e-300) : y;
      if (!have_data) {
        xmin = xmax = x;
        ymin = ymax = yy;
        have_data = true;
      } else {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, yy);
        ymax = std::max(ymax, yy);
      }
    }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (options.y_log) {
    double lo = std::floor(std::log10(ymin));
    double hi = std::ceil(std::log10(ymax));
    if (hi <= lo) hi = lo + 1.0;
    ymin = lo;
    ymax = hi;  // stored as exponents
  } else if (ymax == ymin) {
    ymax = ymin + 1.0;
  }

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) {
    const double v = options.y_log ? std::log10(std::max(y, 1e-300)) : y;
    return kTop + ph - (v - ymin) / (ymax - ymin) * ph;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
         "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " +
         num(kHeight) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!options.title.empty())
    svg += "<text x=\"" + num(kWidth / 2) +
           "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">" +
           escape(options.title) + "</text>\n";

  // axes
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
         "\" y2=\"" + num(kTop + ph) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" +
         num(kLeft + pw) + "\" y2=\"" + num(kTop + ph) + "\" stroke=\"black\"/>\n";

  // x ticks
  const int xticks = 5;
  for (int i = 0; i <= xticks; ++i) {
    const double x = xmin + (xmax - xmin) * i / xticks;
    const double px = sx(x);
    svg += "<line x1=\"" + num(px) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + num(px) +
           "\" y2=\"" + num(kTop + ph + 5) + "\" stroke=\"black\"/>\n";
    char label[32];
    std::snprintf(label, sizeof(label), "%g", x);
    svg += "<text x=\"" + num(px) + "\" y=\"" + num(kTop + ph + 20) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
           label + "</text>\n";
  }
  // y ticks
  const int yticks = 5;
  for (int i = 0; i <= yticks; ++i) {
    const double v = ymin + (ymax - ymin) * i / yticks;
    const double py = kTop + ph - (v - ymin) / (ymax - ymin) * ph;
    svg += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(py) + "\" x2=\"" +
           num(kLeft) + "\" y2=\"" + num(py) + "\" stroke=\"black\"/>\n";
    char label[32];
    if (options.y_log)
      std::snprintf(label, sizeof(label), "1e%g", v);
    else
      std::snprintf(label, sizeof(label), "%g", v);
    svg += "<text x=\"" + num(kLeft - 9) + "\" y=\"" + num(py + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" + label +
           "</text>\n";
  }
  if (!options.x_label.empty())
    svg += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
           escape(options.x_label) + "</text>\n";
  if (!options.y_label.empty())
    svg += "<text x=\"20\" y=\"" + num(kTop + ph / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 20 " +
           num(kTop + ph / 2) + ")\">" + escape(options.y_label) + "</text>\n";

  // series
  for (std::size_t s = 0; s < curves.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::string pts;
    for (const auto& [x, y] : curves[s].points) {
      if (!pts.empty()) pts += ' ';
      pts += num(sx(x)) + "," + num(sy(y));
    }
    if (!pts.empty())
      svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
             "\" stroke-width=\"1.8\" points=\"" + pts + "\"/>\n";
    // legend row
    const double ly = kTop + 10 + 18.0 * static_cast<double>(s);
    const double lx = kLeft + pw - 170;
    svg += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(lx + 24) +
           "\" y2=\"" + num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + num(lx + 30) + "\" y=\"" + num(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + escape(curves[s].label) +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void render_plot_svg(const std::vector<Curve>& curves, const std::string& path,
                     const PlotOptions& options) {
  write_text_file(path, render_plot_svg_string(curves, options));
}

}  // namespace dsgd
