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

#include <splin/heatmap.hpp>

#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <sstream>

namespace splin {
namespace {

namespace pt = boost::property_tree;

pt::ptree parse_svg(const std::string& svg) {
  std::istringstream in(svg);
  pt::ptree tree;
  pt::read_xml(in, tree);
  return tree;
}

PhaseGrid empty_grid(Index n, std::vector<Index> ks, std::vector<Index> ms, Index trials) {
  PhaseGrid g;
  g.n = n;
  g.k_values = std::move(ks);
  g.m_values = std::move(ms);
  g.trials_per_cell = trials;
  g.successes.setZero(Index(g.k_values.size()), Index(g.m_values.size()));
  g.failures.setZero(Index(g.k_values.size()), Index(g.m_values.size()));
  return g;
}

// Every cell at or beyond c * k ln(n/k) always succeeds, every other cell never does.
PhaseGrid step_grid(double c) {
  PhaseGrid g = empty_grid(128, {1, 2, 3, 4, 5, 6, 7, 8}, m_range(1, 79, 2), 10);
  for (std::size_t ki = 0; ki < g.k_values.size(); ++ki)
    for (std::size_t mi = 0; mi < g.m_values.size(); ++mi)
      if (double(g.m_values[mi]) >= c * theoretical_min_m(g.k_values[ki], g.n)) g.successes(Index(ki), Index(mi)) = 10;
  return g;
}

std::vector<std::pair<double, double>> points(const pt::ptree& svg, const std::string& id) {
  for (const auto& [name, child] : svg)
    if (name == "polyline" && child.get<std::string>("<xmlattr>.id") == id) {
      std::vector<std::pair<double, double>> out;
      std::istringstream in(child.get<std::string>("<xmlattr>.points"));
      std::string tok;
      while (in >> tok) {
        const auto comma = tok.find(',');
        out.emplace_back(std::stod(tok.substr(0, comma)), std::stod(tok.substr(comma + 1)));
      }
      return out;
    }
  return {};
}

TEST(Heatmap, SingleCellIsWhiteAndParses) {
  PhaseGrid g = empty_grid(16, {1}, {8}, 4);
  g.successes(0, 0) = 4;
  const pt::ptree tree = parse_svg(emit_heatmap(g));
  const pt::ptree& svg = tree.get_child("svg");
  const pt::ptree& cells = svg.get_child("g");
  ASSERT_EQ(cells.count("rect"), 1u);
  const pt::ptree& rect = cells.get_child("rect");
  EXPECT_EQ(rect.get<std::string>("<xmlattr>.fill"), "#ffffff");
  EXPECT_EQ(rect.get<int>("<xmlattr>.data-k"), 1);
  EXPECT_EQ(rect.get<int>("<xmlattr>.data-m"), 8);
  EXPECT_EQ(rect.get<double>("<xmlattr>.data-rate"), 1.0);
}

TEST(Heatmap, OneRectPerCellShadedByRate) {
  PhaseGrid g = empty_grid(32, {1, 2, 3}, {4, 8}, 4);
  g.successes << 0, 1, 2, 3, 4, 4;
  const pt::ptree tree = parse_svg(emit_heatmap(g));
  const pt::ptree& svg = tree.get_child("svg");
  std::vector<std::string> fills;
  for (const auto& [name, rect] : svg.get_child("g"))
    if (name == "rect") fills.push_back(rect.get<std::string>("<xmlattr>.fill"));
  EXPECT_EQ(fills, (std::vector<std::string>{"#000000", "#404040", "#808080", "#bfbfbf", "#ffffff", "#ffffff"}));
  std::vector<std::string> labels;
  for (const auto& [name, text] : svg)
    if (name == "text") labels.push_back(text.data());
  EXPECT_NE(std::find(labels.begin(), labels.end(), "M"), labels.end());
  EXPECT_NE(std::find(labels.begin(), labels.end(), "K"), labels.end());
  EXPECT_EQ(points(svg, "theory").size(), 3u);
  EXPECT_TRUE(points(svg, "fit").empty());
}

TEST(Heatmap, OverlayTracksConstructedBoundary) {
  const HeatmapLayout lay;
  for (double c : {1.0, 2.0}) {
    const PhaseGrid g = step_grid(c);
    const BoundaryFit fit = fit_boundary(g);
    const pt::ptree tree = parse_svg(emit_heatmap(g, &fit, lay));
    const pt::ptree& svg = tree.get_child("svg");
    const auto overlay = points(svg, c == 1.0 ? "theory" : "fit");
    ASSERT_EQ(overlay.size(), g.k_values.size());
    for (std::size_t ki = 0; ki < g.k_values.size(); ++ki) {
      // Left edge of the first white cell in this row.
      std::size_t first = 0;
      while (g.successes(Index(ki), Index(first)) == 0) ++first;
      const double edge = lay.margin_left + double(first) * lay.cell_width;
      EXPECT_LE(std::abs(overlay[ki].first - edge), lay.cell_width) << "c=" << c << " k=" << g.k_values[ki];
      EXPECT_DOUBLE_EQ(overlay[ki].second, heatmap_y(g, ki, lay));
    }
  }
}

TEST(Heatmap, PixelMapping) {
  const PhaseGrid g = empty_grid(64, {1, 2}, {10, 20, 40}, 1);
  const HeatmapLayout lay;
  EXPECT_DOUBLE_EQ(heatmap_x(g, 10, lay), lay.margin_left + 0.5 * lay.cell_width);
  EXPECT_DOUBLE_EQ(heatmap_x(g, 30, lay), lay.margin_left + 2.0 * lay.cell_width);
  EXPECT_DOUBLE_EQ(heatmap_x(g, 1000, lay), lay.margin_left + 2.5 * lay.cell_width);
  EXPECT_GT(heatmap_y(g, 0, lay), heatmap_y(g, 1, lay));
}

TEST(Heatmap, RejectsEmptyGrid) {
  EXPECT_THROW(emit_heatmap(empty_grid(8, {}, {1}, 1)), InvalidArgument);
}

}  // namespace
}  // namespace splin
