#pragma once

#include "echo/core/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace echo {

struct Series {
  std::string name;
  std::vector<double> y;
};

/// Polyline chart over shared x values; log_y plots log10 of positive values.
std::string svg_line_plot(const std::string& title, const std::vector<double>& x,
                          const std::vector<Series>& series, bool log_y);

/// Grouped bars: one group per label, one bar per series.
std::string svg_bar_plot(const std::string& title, const std::vector<std::string>& labels,
                         const std::vector<Series>& series, const std::string& y_label);

/// One skeleton drawing (front view, x right, y up).
struct StickLayer {
  Matrix joints;  // J x 3, mm
  std::vector<int> parents;
  std::string color;
  bool dashed = false;
  double opacity = 1.0;
};

std::string svg_stick_figure(const std::string& title, const std::vector<StickLayer>& layers);

}  // namespace echo
