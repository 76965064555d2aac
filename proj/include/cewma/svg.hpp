#pragma once

#include <string>

#include "cewma/monitor.hpp"

namespace cewma {

// Knobs for the static chart rendering. Zero-initialized fields fall back
// to the defaults below.
struct ChartStyle {
  int width = 860;
  int height = 420;
  std::string title;  // drawn above the plot when nonempty
};

// Self-contained SVG: EWMA polyline, the time-varying UCL curve, the zero
// baseline, and one marker per period (signals highlighted).
std::string render_chart_svg(const ChartSeries& series,
                             const ChartStyle& style = {});

}  // namespace cewma
