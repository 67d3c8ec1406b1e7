// Copyright 2026 The splin Authors.
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

#ifndef SPLIN_HEATMAP_HPP
#define SPLIN_HEATMAP_HPP

#include <splin/csv.hpp>
#include <splin/phase_lab.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace splin {

struct HeatmapLayout {
  double cell_width = 14.0;
  double cell_height = 28.0;
  double margin_left = 60.0;
  double margin_top = 20.0;
  double margin_bottom = 50.0;
  double margin_right = 20.0;
};

namespace detail {

inline std::string fmt_px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline std::string gray(double rate) {
  const int g = static_cast<int>(std::lround(255.0 * std::clamp(rate, 0.0, 1.0)));
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", g, g, g);
  return buf;
}

}  // namespace detail

/// Horizontal pixel position of measurement count m: linear between the
/// centers of the bracketing columns, clamped to the outer centers.
inline double heatmap_x(const PhaseGrid& grid, double m, const HeatmapLayout& lay = {}) {
  const auto& ms = grid.m_values;
  auto center = [&](std::size_t i) { return lay.margin_left + (double(i) + 0.5) * lay.cell_width; };
  if (ms.size() == 1 || m <= double(ms.front())) return center(0);
  if (m >= double(ms.back())) return center(ms.size() - 1);
  std::size_t i = 1;
  while (double(ms[i]) < m) ++i;
  const double t = (m - double(ms[i - 1])) / double(ms[i] - ms[i - 1]);
  return center(i - 1) + t * lay.cell_width;
}

/// Vertical pixel center of row ki; k grows upward.
inline double heatmap_y(const PhaseGrid& grid, std::size_t ki, const HeatmapLayout& lay = {}) {
  const double rows = double(grid.k_values.size());
  return lay.margin_top + (rows - double(ki) - 0.5) * lay.cell_height;
}

/// One rect per cell (white = always recovered, black = never), a dashed
/// polyline at M = K ln(N/K) and, when `fit` has a finite constant, a solid
/// polyline at M = c K ln(N/K).
inline std::string emit_heatmap(const PhaseGrid& grid, const BoundaryFit* fit = nullptr,
                                const HeatmapLayout& lay = {}) {
  require(!grid.k_values.empty() && !grid.m_values.empty(), "heatmap needs a non-empty grid");
  const std::size_t nk = grid.k_values.size(), nm = grid.m_values.size();
  const double width = lay.margin_left + double(nm) * lay.cell_width + lay.margin_right;
  const double height = lay.margin_top + double(nk) * lay.cell_height + lay.margin_bottom;
  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt_px(width) + "\" height=\"" +
       detail::fmt_px(height) + "\" viewBox=\"0 0 " + detail::fmt_px(width) + " " + detail::fmt_px(height) + "\">\n";
  s += "<g id=\"cells\">\n";
  for (std::size_t ki = 0; ki < nk; ++ki) {
    for (std::size_t mi = 0; mi < nm; ++mi) {
      const double x = lay.margin_left + double(mi) * lay.cell_width;
      const double y = heatmap_y(grid, ki, lay) - 0.5 * lay.cell_height;
      s += "<rect x=\"" + detail::fmt_px(x) + "\" y=\"" + detail::fmt_px(y) + "\" width=\"" +
           detail::fmt_px(lay.cell_width) + "\" height=\"" + detail::fmt_px(lay.cell_height) + "\" fill=\"" +
           detail::gray(grid.rate(Index(ki), Index(mi))) + "\" data-k=\"" + std::to_string(grid.k_values[ki]) +
           "\" data-m=\"" + std::to_string(grid.m_values[mi]) + "\" data-rate=\"" +
           format_double(grid.rate(Index(ki), Index(mi))) + "\"/>\n";
    }
  }
  s += "</g>\n";

  auto polyline = [&](const std::string& id, double scale, const std::string& style) {
    std::string pts;
    for (std::size_t ki = 0; ki < nk; ++ki) {
      const double m = scale * theoretical_min_m(grid.k_values[ki], grid.n);
      pts += (ki ? " " : "") + detail::fmt_px(heatmap_x(grid, m, lay)) + "," + detail::fmt_px(heatmap_y(grid, ki, lay));
    }
    s += "<polyline id=\"" + id + "\" points=\"" + pts + "\" fill=\"none\" " + style + "/>\n";
  };
  polyline("theory", 1.0, "stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"6,3\"");
  if (fit && std::isfinite(fit->c)) polyline("fit", fit->c, "stroke=\"#1f77b4\" stroke-width=\"2\"");

  const double axis_y = lay.margin_top + double(nk) * lay.cell_height;
  s += "<text x=\"" + detail::fmt_px(lay.margin_left + 0.5 * double(nm) * lay.cell_width) + "\" y=\"" +
       detail::fmt_px(axis_y + 40.0) + "\" text-anchor=\"middle\" font-size=\"14\">M</text>\n";
  s += "<text x=\"20\" y=\"" + detail::fmt_px(lay.margin_top + 0.5 * double(nk) * lay.cell_height) +
       "\" text-anchor=\"middle\" font-size=\"14\">K</text>\n";
  for (std::size_t mi = 0; mi < nm; mi += std::max<std::size_t>(1, nm / 10))
    s += "<text x=\"" + detail::fmt_px(lay.margin_left + (double(mi) + 0.5) * lay.cell_width) + "\" y=\"" +
         detail::fmt_px(axis_y + 16.0) + "\" text-anchor=\"middle\" font-size=\"10\">" +
         std::to_string(grid.m_values[mi]) + "</text>\n";
  for (std::size_t ki = 0; ki < nk; ++ki)
    s += "<text x=\"" + detail::fmt_px(lay.margin_left - 6.0) + "\" y=\"" + detail::fmt_px(heatmap_y(grid, ki, lay) + 4.0) +
         "\" text-anchor=\"end\" font-size=\"10\">" + std::to_string(grid.k_values[ki]) + "</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace splin

#endif  // SPLIN_HEATMAP_HPP
