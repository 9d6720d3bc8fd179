#ifndef DSGD_SVG_HPP
#define DSGD_SVG_HPP

#include <string>
#include <utility>
#include <vector>

namespace dsgd {

struct Curve {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct PlotOptions {
  std::string title;
  std::string x_label = "communication rounds";
  std::string y_label;
  bool y_log = true;
};

/// Self-contained SVG line chart: log-scale y axis, one polyline per
/// series, legend with the series labels.  An empty curve list still
/// yields a valid chart with axes.
std::string render_plot_svg_string(const std::vector<Curve>& curves,
                                   const PlotOptions& options);
void render_plot_svg(const std::vector<Curve>& curves, const std::string& path,
                     const PlotOptions& options = {});

}  // namespace dsgd

#endif
