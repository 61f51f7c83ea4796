#pragma once

#include <string>
#include <vector>

namespace fairlend {

// Minimal SVG chart writer for the scatter / line artifacts that accompany
// the CSV outputs. Axes are linear with auto-padded ranges and 5 ticks.

struct SvgSeries {
  std::string name;
  std::string color = "#1f77b4";
  std::vector<double> x, y;   // same length
  bool draw_line = false;     // polyline through the points
  bool draw_points = true;    // circles at the points
};

struct SvgChart {
  int width = 640, height = 480;
  std::string title, x_label, y_label;
  std::vector<SvgSeries> series;

  std::string render() const;
  void save(const std::string& path) const;  // atomic write
};

}  // namespace fairlend
