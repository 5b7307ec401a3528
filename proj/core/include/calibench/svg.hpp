#pragma once

/// Minimal SVG plotting for calibration reports: stated confidence against
/// realized accuracy with a 45-degree reference line, one circle per
/// confidence level, circle area scaled by observation count.

#include <string>
#include <vector>

#include "calibench/calibration.hpp"

namespace calibench {

struct SvgPlotOptions {
  int width = 640;
  int height = 480;
  std::string title = "Calibration";
  std::string x_label = "stated confidence";
  std::string y_label = "accuracy";
  /// Axis range; calibration data lives in [0,1] on both axes.
  double min_value = 0.0;
  double max_value = 1.0;
};

/// Renders the scatter as a standalone SVG document. The manifest hash, when
/// given, is embedded as an XML comment so the artifact stays traceable.
std::string calibration_svg(const std::vector<CurvePoint>& points,
                            const SvgPlotOptions& options = {},
                            const std::string& manifest_hash = "");

void save_calibration_svg(const std::vector<CurvePoint>& points, const std::string& path,
                          const SvgPlotOptions& options = {},
                          const std::string& manifest_hash = "");

}  // namespace calibench
