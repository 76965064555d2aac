#include "cewma/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace cewma {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape_text(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

// A readable tick step near range/5: 1, 2, 2.5, or 5 times a power of ten.
double nice_step(double range) {
  const double rough = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(rough)));
  const double r = rough / mag;
  double step = 10.0;
  if (r <= 1.0) step = 1.0;
  else if (r <= 2.0) step = 2.0;
  else if (r <= 2.5) step = 2.5;
  else if (r <= 5.0) step = 5.0;
  return step * mag;
}

}  // namespace

std::string render_chart_svg(const ChartSeries& series,
                             const ChartStyle& style) {
  if (series.points.empty()) {
    throw ValidationError("cannot render an empty chart series");
  }
  const int width = style.width > 0 ? style.width : 860;
  const int height = style.height > 0 ? style.height : 420;
  const double ml = 64, mr = 24, mt = 42, mb = 48;
  const double pw = width - ml - mr;
  const double ph = height - mt - mb;

  double y_min = 0.0;
  double y_max = series.ucl_asymptote;
  for (const ChartPoint& p : series.points) {
    y_min = std::min({y_min, p.ewma});
    y_max = std::max({y_max, p.ewma, p.ucl});
  }
  const double pad = 0.06 * (y_max - y_min);
  y_max += pad;
  y_min -= (y_min < 0.0 ? pad : 0.0);
  if (y_max <= y_min) y_max = y_min + 1.0;

  const std::size_t count = series.points.size();
  const auto x_of = [&](std::size_t i) {
    if (count == 1) return ml + pw / 2.0;
    return ml + pw * static_cast<double>(i) / static_cast<double>(count - 1);
  };
  const auto y_of = [&](double v) {
    return mt + ph * (y_max - v) / (y_max - y_min);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n";
  svg << "<style>\n"
         ".frame{fill:none;stroke:#444;stroke-width:1}\n"
         ".grid{stroke:#ddd;stroke-width:0.5}\n"
         ".ewma{fill:none;stroke:#2060b0;stroke-width:1.5}\n"
         ".ucl{fill:none;stroke:#c03030;stroke-width:1.2;stroke-dasharray:6 3}\n"
         ".lcl{stroke:#888;stroke-width:1;stroke-dasharray:2 3}\n"
         ".pt{fill:#2060b0;stroke:none}\n"
         ".pt.sig{fill:#c03030;stroke:#701010;stroke-width:1}\n"
         ".lbl{font:11px sans-serif;fill:#333}\n"
         ".title{font:bold 13px sans-serif;fill:#111}\n"
         "</style>\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"#ffffff\"/>\n";

  const std::string title =
      !style.title.empty()
          ? style.title
          : std::string(to_string(series.variant)) + " EWMA p chart";
  svg << "<text class=\"title\" x=\"" << num(ml) << "\" y=\"22\">"
      << escape_text(title) << "</text>\n";

  // Horizontal grid lines and y labels.
  const double step = nice_step(y_max - y_min);
  for (double v = std::ceil(y_min / step) * step; v <= y_max + 1e-12;
       v += step) {
    const double y = y_of(v);
    svg << "<line class=\"grid\" x1=\"" << num(ml) << "\" y1=\"" << num(y)
        << "\" x2=\"" << num(ml + pw) << "\" y2=\"" << num(y) << "\"/>\n";
    char lbl[32];
    std::snprintf(lbl, sizeof(lbl), "%.3g", v + 0.0);
    svg << "<text class=\"lbl\" x=\"" << num(ml - 8) << "\" y=\""
        << num(y + 3.5) << "\" text-anchor=\"end\">" << lbl << "</text>\n";
  }

  // X labels on a handful of periods.
  const std::size_t x_every = std::max<std::size_t>(1, count / 10);
  for (std::size_t i = 0; i < count; i += x_every) {
    svg << "<text class=\"lbl\" x=\"" << num(x_of(i)) << "\" y=\""
        << num(mt + ph + 16) << "\" text-anchor=\"middle\">"
        << series.points[i].time << "</text>\n";
  }

  // Zero baseline (the non-signaling lower limit).
  if (y_min <= 0.0 && 0.0 <= y_max) {
    const double y0 = y_of(0.0);
    svg << "<line class=\"lcl\" x1=\"" << num(ml) << "\" y1=\"" << num(y0)
        << "\" x2=\"" << num(ml + pw) << "\" y2=\"" << num(y0) << "\"/>\n";
  }

  svg << "<polyline class=\"ucl\" points=\"";
  for (std::size_t i = 0; i < count; ++i) {
    if (i) svg << ' ';
    svg << num(x_of(i)) << ',' << num(y_of(series.points[i].ucl));
  }
  svg << "\"/>\n";

  svg << "<polyline class=\"ewma\" points=\"";
  for (std::size_t i = 0; i < count; ++i) {
    if (i) svg << ' ';
    svg << num(x_of(i)) << ',' << num(y_of(series.points[i].ewma));
  }
  svg << "\"/>\n";

  for (std::size_t i = 0; i < count; ++i) {
    const ChartPoint& p = series.points[i];
    svg << "<circle class=\"pt" << (p.signal ? " sig" : "") << "\" cx=\""
        << num(x_of(i)) << "\" cy=\"" << num(y_of(p.ewma)) << "\" r=\""
        << (p.signal ? "3.5" : "2.5") << "\"/>\n";
  }

  svg << "<rect class=\"frame\" x=\"" << num(ml) << "\" y=\"" << num(mt)
      << "\" width=\"" << num(pw) << "\" height=\"" << num(ph) << "\"/>\n";

  char footer[160];
  std::snprintf(footer, sizeof(footer),
                "lambda=%.4g  L=%.4g  center=%.4g  UCL=%.4g  signals=%d",
                series.lambda, series.l_coefficient, series.center,
                series.ucl_asymptote, series.signal_count());
  svg << "<text class=\"lbl\" x=\"" << num(ml) << "\" y=\""
      << num(mt + ph + 34) << "\">" << escape_text(footer) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace cewma
