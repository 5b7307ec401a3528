#include "calibench/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "calibench/errors.hpp"

namespace calibench {

namespace {

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string calibration_svg(const std::vector<CurvePoint>& points, const SvgPlotOptions& options,
                            const std::string& manifest_hash) {
  if (options.width < 120 || options.height < 120) {
    throw UsageError("calibration_svg: plot must be at least 120x120");
  }
  if (!(options.max_value > options.min_value)) {
    throw UsageError("calibration_svg: empty axis range");
  }
  const double margin_left = 64, margin_right = 20, margin_top = 40, margin_bottom = 48;
  const double plot_w = options.width - margin_left - margin_right;
  const double plot_h = options.height - margin_top - margin_bottom;
  auto sx = [&](double v) {
    return margin_left + (v - options.min_value) / (options.max_value - options.min_value) * plot_w;
  };
  auto sy = [&](double v) {
    return margin_top + plot_h -
           (v - options.min_value) / (options.max_value - options.min_value) * plot_h;
  };

  std::size_t max_count = 1;
  for (const auto& p : points) max_count = std::max(max_count, p.count);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\""
      << options.height << "\" viewBox=\"0 0 " << options.width << " " << options.height
      << "\">\n";
  if (!manifest_hash.empty()) svg << "<!-- manifest: " << manifest_hash << " -->\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num(options.width / 2.0) << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << options.title << "</text>\n";

  // Gridlines and tick labels every quarter of the range.
  for (int i = 0; i <= 4; ++i) {
    double v = options.min_value + (options.max_value - options.min_value) * i / 4.0;
    svg << "<line x1=\"" << num(sx(v)) << "\" y1=\"" << num(sy(options.min_value)) << "\" x2=\""
        << num(sx(v)) << "\" y2=\"" << num(sy(options.max_value))
        << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg << "<line x1=\"" << num(sx(options.min_value)) << "\" y1=\"" << num(sy(v)) << "\" x2=\""
        << num(sx(options.max_value)) << "\" y2=\"" << num(sy(v))
        << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << num(sx(v)) << "\" y=\"" << num(sy(options.min_value) + 18.0)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(v)
        << "</text>\n";
    svg << "<text x=\"" << num(sx(options.min_value) - 8.0) << "\" y=\"" << num(sy(v) + 4.0)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(v)
        << "</text>\n";
  }

  // 45-degree perfect-calibration reference.
  svg << "<line x1=\"" << num(sx(options.min_value)) << "\" y1=\"" << num(sy(options.min_value))
      << "\" x2=\"" << num(sx(options.max_value)) << "\" y2=\"" << num(sy(options.max_value))
      << "\" stroke=\"#888888\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n";

  // Axes.
  svg << "<rect x=\"" << num(margin_left) << "\" y=\"" << num(margin_top) << "\" width=\""
      << num(plot_w) << "\" height=\"" << num(plot_h)
      << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  svg << "<text x=\"" << num(margin_left + plot_w / 2.0) << "\" y=\""
      << num(options.height - 10.0)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << options.x_label << "</text>\n";
  svg << "<text x=\"16\" y=\"" << num(margin_top + plot_h / 2.0)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 16 " << num(margin_top + plot_h / 2.0) << ")\">"
      << options.y_label << "</text>\n";

  // Data points; area proportional to the observation count.
  const double r_min = 3.0, r_max = 16.0;
  for (const auto& p : points) {
    double scale = std::sqrt(static_cast<double>(p.count) / static_cast<double>(max_count));
    double r = r_min + (r_max - r_min) * scale;
    svg << "<circle cx=\"" << num(sx(p.confidence)) << "\" cy=\"" << num(sy(p.accuracy))
        << "\" r=\"" << num(r)
        << "\" fill=\"#3366cc\" fill-opacity=\"0.55\" stroke=\"#224499\" stroke-width=\"1\">"
        << "<title>confidence " << num(p.confidence) << ", accuracy " << num(p.accuracy) << ", n="
        << p.count << "</title></circle>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void save_calibration_svg(const std::vector<CurvePoint>& points, const std::string& path,
                          const SvgPlotOptions& options, const std::string& manifest_hash) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write svg: " + path);
  out << calibration_svg(points, options, manifest_hash);
}

}  // namespace calibench
