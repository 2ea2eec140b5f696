#pragma once

#include <string>
#include <vector>

namespace ncmest::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Figure {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  std::vector<Series> series;
};

// Standalone SVG line chart (no plotting runtime required to view it).
std::string render_svg(const Figure& fig, int width = 720, int height = 480);

// gnuplot script that renders the same figure from a data CSV; columns is the
// 1-based (x, y) column pair per series in that CSV.
std::string render_gnuplot(const Figure& fig, const std::string& csv_name,
                           const std::vector<std::pair<int, int>>& columns);

void write_figure(const Figure& fig, const std::string& out_dir, const std::string& stem);

}  // namespace ncmest::plot
