#pragma once

#include <string>
#include <vector>

namespace propslam {

struct Series {
  std::string name;
  std::vector<double> values;  // y at x = 0, 1, 2, ...
};

/// Static line chart, one polyline per series, with axes and a legend.
std::string line_chart_svg(const std::vector<Series>& series, const std::string& x_label,
                           const std::string& y_label);

}  // namespace propslam
