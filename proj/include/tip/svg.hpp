#pragma once

// Small self-contained SVG renderer for the report stage: ROC / PR curve
// overlays (one curve per model tier) and the delta-label scatter with its
// +/-0.5 band.

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "tip/temporal.hpp"

namespace tip {

struct CurveSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

namespace svg_detail {

constexpr int kWidth = 640;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 60;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

inline const std::vector<std::string>& palette() {
  static const std::vector<std::string> v = {"#e6b400", "#2a9d3a", "#1f5fbf",
                                             "#c0392b", "#8e44ad"};
  return v;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Scale {
  double x_min, x_max, y_min, y_max;
  double x(double v) const {
    return kMarginLeft + (v - x_min) / (x_max - x_min) * (kWidth - kMarginLeft - kMarginRight);
  }
  double y(double v) const {
    return kHeight - kMarginBottom -
           (v - y_min) / (y_max - y_min) * (kHeight - kMarginTop - kMarginBottom);
  }
};

inline void axes(std::string& out, const Scale& s, const std::string& x_label,
                 const std::string& y_label, int ticks) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<rect x='%d' y='%d' width='%d' height='%d' fill='none' stroke='#444'/>\n",
                kMarginLeft, kMarginTop, kWidth - kMarginLeft - kMarginRight,
                kHeight - kMarginTop - kMarginBottom);
  out += buf;
  for (int t = 0; t <= ticks; ++t) {
    const double fx = s.x_min + (s.x_max - s.x_min) * t / ticks;
    const double fy = s.y_min + (s.y_max - s.y_min) * t / ticks;
    std::snprintf(buf, sizeof(buf),
                  "<text x='%.1f' y='%d' font-size='11' text-anchor='middle' fill='#333'>%s</text>\n",
                  s.x(fx), kHeight - kMarginBottom + 18, fmt(fx).c_str());
    out += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x='%d' y='%.1f' font-size='11' text-anchor='end' fill='#333'>%s</text>\n",
                  kMarginLeft - 6, s.y(fy) + 4, fmt(fy).c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<text x='%d' y='%d' font-size='13' text-anchor='middle' fill='#111'>%s</text>\n",
                (kMarginLeft + kWidth - kMarginRight) / 2, kHeight - 12, x_label.c_str());
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x='16' y='%d' font-size='13' text-anchor='middle' fill='#111' "
                "transform='rotate(-90 16 %d)'>%s</text>\n",
                (kMarginTop + kHeight - kMarginBottom) / 2,
                (kMarginTop + kHeight - kMarginBottom) / 2, y_label.c_str());
  out += buf;
}

}  // namespace svg_detail

inline std::string render_curves_svg(const std::string& title, const std::string& x_label,
                                     const std::string& y_label,
                                     const std::vector<CurveSeries>& series,
                                     const std::string& comment = {}) {
  using namespace svg_detail;
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns='http://www.w3.org/2000/svg' width='%d' height='%d' "
                "viewBox='0 0 %d %d'>\n",
                kWidth, kHeight, kWidth, kHeight);
  out += buf;
  if (!comment.empty()) out += "<!-- " + comment + " -->\n";
  out += "<rect width='100%' height='100%' fill='white'/>\n";
  std::snprintf(buf, sizeof(buf),
                "<text x='%d' y='24' font-size='15' text-anchor='middle' fill='#111'>%s</text>\n",
                kWidth / 2, title.c_str());
  out += buf;

  const Scale s{0.0, 1.0, 0.0, 1.0};
  axes(out, s, x_label, y_label, 5);
  std::snprintf(buf, sizeof(buf),
                "<line x1='%.1f' y1='%.1f' x2='%.1f' y2='%.1f' stroke='#bbb' "
                "stroke-dasharray='4 4'/>\n",
                s.x(0.0), s.y(0.0), s.x(1.0), s.y(1.0));
  out += buf;

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& color = palette()[k % palette().size()];
    out += "<polyline fill='none' stroke='" + color + "' stroke-width='1.8' points='";
    for (const auto& [x, y] : series[k].points) {
      std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", s.x(x), s.y(y));
      out += buf;
    }
    out += "'/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<rect x='%d' y='%d' width='14' height='4' fill='%s'/>"
                  "<text x='%d' y='%d' font-size='12' fill='#111'>%s</text>\n",
                  kWidth - 170, kMarginTop + 14 + static_cast<int>(k) * 18, color.c_str(),
                  kWidth - 150, kMarginTop + 19 + static_cast<int>(k) * 18,
                  series[k].name.c_str());
    out += buf;
  }
  out += "</svg>\n";
  return out;
}

/// Delta-label scatter: delta vs publication year, grey band at +/-0.5,
/// points colored by real label (green 1, red 0).
inline std::string render_delta_svg(const std::vector<TemporalPoint>& points, int year_min,
                                    int year_max, const std::string& comment = {}) {
  using namespace svg_detail;
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns='http://www.w3.org/2000/svg' width='%d' height='%d' "
                "viewBox='0 0 %d %d'>\n",
                kWidth, kHeight, kWidth, kHeight);
  out += buf;
  if (!comment.empty()) out += "<!-- " + comment + " -->\n";
  out += "<rect width='100%' height='100%' fill='white'/>\n";
  std::snprintf(buf, sizeof(buf),
                "<text x='%d' y='24' font-size='15' text-anchor='middle' fill='#111'>"
                "Delta label by publication year</text>\n",
                kWidth / 2);
  out += buf;

  const Scale s{static_cast<double>(year_min), static_cast<double>(year_max), -1.05, 1.05};
  std::snprintf(buf, sizeof(buf),
                "<rect x='%.1f' y='%.1f' width='%.1f' height='%.1f' fill='#e5e5e5'/>\n",
                s.x(static_cast<double>(year_min)), s.y(0.5),
                s.x(static_cast<double>(year_max)) - s.x(static_cast<double>(year_min)),
                s.y(-0.5) - s.y(0.5));
  out += buf;
  axes(out, s, "publication year", "delta (real - predicted)", 5);

  for (const auto& pt : points) {
    std::snprintf(buf, sizeof(buf), "<circle cx='%.1f' cy='%.1f' r='3' fill='%s' opacity='0.8'/>\n",
                  s.x(static_cast<double>(pt.year)), s.y(pt.delta),
                  pt.real_label == 1 ? "#2a9d3a" : "#c0392b");
    out += buf;
  }
  out += "</svg>\n";
  return out;
}

}  // namespace tip
