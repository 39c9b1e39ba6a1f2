// Copyright 2026 The speedobs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal SVG line plot: one polyline, framed axes, min/max tick labels.
#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <locale>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace speedobs {

struct LinePlot {
  std::string title;
  std::string x_label = "t [s]";
  std::string y_label;
  std::vector<double> x;
  std::vector<double> y;
  /// Plot log10(y); non-positive samples are clipped to the smallest
  /// positive value in the series.
  bool log_y = false;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

inline void write_svg(std::ostream& os, const LinePlot& plot) {
  if (plot.x.size() != plot.y.size()) {
    throw std::invalid_argument("svg: x and y differ in length");
  }
  constexpr double width = 640, height = 400;
  constexpr double left = 70, right = 20, top = 40, bottom = 50;
  const double pw = width - left - right;
  const double ph = height - top - bottom;

  std::vector<double> ys = plot.y;
  if (plot.log_y) {
    double floor = std::numeric_limits<double>::infinity();
    for (double v : ys) {
      if (v > 0 && std::isfinite(v)) floor = std::min(floor, v);
    }
    if (!std::isfinite(floor)) floor = 1e-300;
    for (double& v : ys) v = std::log10(std::max(v, floor));
  }
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!plot.x.empty()) {
    const auto [xa, xb] = std::minmax_element(plot.x.begin(), plot.x.end());
    const auto [ya, yb] = std::minmax_element(ys.begin(), ys.end());
    x0 = *xa, x1 = *xb, y0 = *ya, y1 = *yb;
  }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  auto sx = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
  auto sy = [&](double v) { return top + (1.0 - (v - y0) / (y1 - y0)) * ph; };

  os.imbue(std::locale::classic());
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
     << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height
     << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"16\">"
     << detail::xml_escape(plot.title) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw
     << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";

  auto label = [&os](double x, double y, const std::string& anchor,
                     const std::string& text) {
    os << "<text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"" << anchor
       << "\" font-family=\"sans-serif\" font-size=\"11\">"
       << detail::xml_escape(text) << "</text>\n";
  };
  auto fmt = [](double v) {
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s << std::setprecision(3) << v;
    return s.str();
  };
  const std::string yprefix = plot.log_y ? "1e" : "";
  label(left, top + ph + 16, "start", fmt(x0));
  label(left + pw, top + ph + 16, "end", fmt(x1));
  label(left - 6, top + ph, "end", yprefix + fmt(y0));
  label(left - 6, top + 10, "end", yprefix + fmt(y1));
  label(left + pw / 2, height - 12, "middle", plot.x_label);
  os << "<text x=\"16\" y=\"" << top + ph / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        "transform=\"rotate(-90 16 "
     << top + ph / 2 << ")\">"
     << detail::xml_escape(plot.y_label + (plot.log_y ? " (log10)" : ""))
     << "</text>\n";

  os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (std::size_t k = 0; k < plot.x.size(); ++k) {
    if (!std::isfinite(ys[k])) continue;
    os << (k ? " " : "") << sx(plot.x[k]) << ',' << sy(ys[k]);
  }
  os << "\"/>\n</svg>\n";
}

}  // namespace speedobs
