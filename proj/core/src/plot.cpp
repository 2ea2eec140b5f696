#include "ncmest/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ncmest/csv.hpp"

namespace ncmest::plot {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

double tx(double v, bool log) {
  if (!log) return v;
  return std::log10(std::max(v, 1e-300));
}

}  // namespace

std::string render_svg(const Figure& fig, int width, int height) {
  const int ml = 70, mr = 20, mt = 40, mb = 50;
  const double pw = width - ml - mr;
  const double ph = height - mt - mb;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : fig.series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      const double x = tx(s.x[i], fig.logx);
      const double y = tx(s.y[i], fig.logy);
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!(xmin < xmax)) { xmin -= 0.5; xmax += 0.5; }
  if (!(ymin < ymax)) { ymin -= 0.5; ymax += 0.5; }
  const double xpad = 0.03 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
  xmin -= xpad; xmax += xpad; ymin -= ypad; ymax += ypad;

  const auto px = [&](double x) { return ml + (tx(x, fig.logx) - xmin) / (xmax - xmin) * pw; };
  const auto py = [&](double y) {
    return mt + ph - (tx(y, fig.logy) - ymin) / (ymax - ymin) * ph;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << fig.title << "</text>\n";

  // Frame and tick labels (4 ticks per axis).
  svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    const double gx = ml + pw * i / 4.0;
    const double gy = mt + ph - ph * i / 4.0;
    std::ostringstream lx, ly;
    lx.precision(3);
    ly.precision(3);
    lx << (fig.logx ? std::pow(10.0, fx) : fx);
    ly << (fig.logy ? std::pow(10.0, fy) : fy);
    svg << "<text x=\"" << gx << "\" y=\"" << mt + ph + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << lx.str() << "</text>\n";
    svg << "<text x=\"" << ml - 6 << "\" y=\"" << gy + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << ly.str() << "</text>\n";
    svg << "<line x1=\"" << gx << "\" y1=\"" << mt << "\" x2=\"" << gx << "\" y2=\""
        << mt + ph << "\" stroke=\"#eee\"/>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << gy << "\" x2=\"" << ml + pw << "\" y2=\"" << gy
        << "\" stroke=\"#eee\"/>\n";
  }
  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\" font-size=\"12\">" << fig.xlabel << "</text>\n";
  svg << "<text x=\"16\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
      << mt + ph / 2 << ")\">" << fig.ylabel << "</text>\n";

  int ci = 0;
  int legend_y = mt + 14;
  for (const auto& s : fig.series) {
    const char* color = kPalette[ci % 10];
    std::ostringstream pts;
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(tx(s.x[i], fig.logx)) || !std::isfinite(tx(s.y[i], fig.logy)))
        continue;
      pts << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.4\" points=\"" << pts.str() << "\"/>\n";
    if (!s.label.empty() && ci < 12) {
      svg << "<line x1=\"" << ml + pw - 150 << "\" y1=\"" << legend_y << "\" x2=\""
          << ml + pw - 130 << "\" y2=\"" << legend_y << "\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n";
      svg << "<text x=\"" << ml + pw - 125 << "\" y=\"" << legend_y + 4
          << "\" font-size=\"11\">" << s.label << "</text>\n";
      legend_y += 15;
    }
    ++ci;
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string render_gnuplot(const Figure& fig, const std::string& csv_name,
                           const std::vector<std::pair<int, int>>& columns) {
  std::ostringstream gp;
  gp << "set datafile separator ','\n";
  gp << "set title '" << fig.title << "'\n";
  gp << "set xlabel '" << fig.xlabel << "'\n";
  gp << "set ylabel '" << fig.ylabel << "'\n";
  if (fig.logx) gp << "set logscale x\n";
  if (fig.logy) gp << "set logscale y\n";
  gp << "set key outside\n";
  gp << "plot ";
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) gp << ", \\\n     ";
    const std::string label = i < fig.series.size() ? fig.series[i].label : "";
    gp << "'" << csv_name << "' using " << columns[i].first << ":" << columns[i].second
       << " with linespoints title '" << label << "'";
  }
  gp << "\n";
  return gp.str();
}

void write_figure(const Figure& fig, const std::string& out_dir, const std::string& stem) {
  csv::write_text(out_dir + "/" + stem + ".svg", render_svg(fig));
  // Companion data file so the gnuplot script has a stable input.
  std::ostringstream data;
  size_t max_len = 0;
  for (const auto& s : fig.series) max_len = std::max(max_len, s.x.size());
  for (size_t i = 0; i < fig.series.size(); ++i) {
    if (i) data << ',' << ',';
    data << fig.series[i].label << "_x," << fig.series[i].label << "_y";
  }
  data << '\n';
  for (size_t r = 0; r < max_len; ++r) {
    for (size_t i = 0; i < fig.series.size(); ++i) {
      if (i) data << ',';
      if (r < fig.series[i].x.size())
        data << csv::fmt_short(fig.series[i].x[r]) << ',' << csv::fmt_short(fig.series[i].y[r]);
      else
        data << ',';
    }
    data << '\n';
  }
  const std::string csv_name = stem + "_plotdata.csv";
  csv::write_text(out_dir + "/" + csv_name, data.str());
  std::vector<std::pair<int, int>> cols;
  for (size_t i = 0; i < fig.series.size(); ++i)
    cols.emplace_back(static_cast<int>(2 * i + 1), static_cast<int>(2 * i + 2));
  csv::write_text(out_dir + "/" + stem + ".gp", render_gnuplot(fig, csv_name, cols));
}

}  // namespace ncmest::plot
