#include "fairlend/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "fairlend/io_util.hpp"

namespace fairlend {

namespace {

// Finite data range over every series, padded by 5% (or ±1 if degenerate).
void data_range(const std::vector<SvgSeries>& series, bool take_x, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const auto& s : series) {
    for (double v : (take_x ? s.x : s.y)) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(lo <= hi)) { lo = 0; hi = 1; }
  const double pad = (hi > lo) ? 0.05 * (hi - lo) : 1.0;
  lo -= pad;
  hi += pad;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

}  // namespace

std::string SvgChart::render() const {
  const int ml = 64, mr = 16, mt = title.empty() ? 16 : 36, mb = 48;
  const double pw = width - ml - mr, ph = height - mt - mb;
  double x0, x1, y0, y1;
  data_range(series, true, x0, x1);
  data_range(series, false, y0, y1);
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return mt + ph - (y - y0) / (y1 - y0) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
     << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
       << title << "</text>\n";

  // Frame, ticks, grid.
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    os << "<line x1=\"" << px(fx) << "\" y1=\"" << mt << "\" x2=\"" << px(fx) << "\" y2=\""
       << mt + ph << "\" stroke=\"#ddd\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << py(fy) << "\" x2=\"" << ml + pw << "\" y2=\""
       << py(fy) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << px(fx) << "\" y=\"" << mt + ph + 16
       << "\" text-anchor=\"middle\">" << fmt(fx) << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << py(fy) + 4
       << "\" text-anchor=\"end\">" << fmt(fy) << "</text>\n";
  }
  if (!x_label.empty())
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 10
       << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  if (!y_label.empty())
    os << "<text x=\"14\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
       << mt + ph / 2 << ")\">" << y_label << "</text>\n";

  for (const auto& s : series) {
    if (s.x.size() != s.y.size())
      throw std::invalid_argument("SvgChart: series '" + s.name + "' has mismatched x/y sizes");
    if (s.draw_line) {
      os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        os << px(s.x[i]) << "," << py(s.y[i]) << " ";
      }
      os << "\"/>\n";
    }
    if (s.draw_points) {
      for (size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
           << "\" r=\"2.5\" fill=\"" << s.color << "\"/>\n";
      }
    }
  }

  // Legend (top-right corner of the plot area).
  int ly = mt + 14;
  for (const auto& s : series) {
    if (s.name.empty()) continue;
    os << "<rect x=\"" << ml + pw - 130 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\""
       << s.color << "\"/>\n";
    os << "<text x=\"" << ml + pw - 116 << "\" y=\"" << ly << "\">" << s.name << "</text>\n";
    ly += 16;
  }
  os << "</svg>\n";
  return os.str();
}

void SvgChart::save(const std::string& path) const { atomic_write_file(path, render()); }

}  // namespace fairlend
